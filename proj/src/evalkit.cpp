#include "eard/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "eard/rng.hpp"
#include "eard/stream_env.hpp"

namespace eard {

namespace {

const Instance& find_instance(const std::vector<Instance>& set,
                              const std::string& id) {
  for (const auto& inst : set) {
    if (inst.id == id) return inst;
  }
  throw Error("config", "decision references unknown instance " + id);
}

RunStats stats_of(std::vector<double> values) {
  RunStats s;
  s.values = std::move(values);
  for (double v : s.values) s.mean += v;
  s.mean /= static_cast<double>(s.values.size());
  double var = 0.0;
  for (double v : s.values) var += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(var / static_cast<double>(s.values.size()));
  return s;
}

nlohmann::json class_to_json(const ClassScores& c) {
  return {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
}

nlohmann::json stats_to_json(const RunStats& s) {
  return {{"values", s.values}, {"mean", s.mean}, {"std", s.std_dev}};
}

}  // namespace

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["macro_f1"] = report.macro_f1;
  if (report.er) {
    j["er"] = *report.er;
  } else {
    j["er"] = nullptr;
  }
  j["non_rumor"] = class_to_json(report.non_rumor);
  j["rumor"] = class_to_json(report.rumor);
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : report.decisions) {
    decisions.push_back({{"id", d.instance_id},
                         {"stop_index", d.stop_index},
                         {"prediction", static_cast<int>(d.prediction)},
                         {"forced", d.forced}});
  }
  j["decisions"] = std::move(decisions);
  if (report.f1_runs) j["macro_f1_runs"] = stats_to_json(*report.f1_runs);
  if (report.er_runs) j["er_runs"] = stats_to_json(*report.er_runs);
  return j;
}

std::vector<Decision> run_policy(const Mlp& policy,
                                 const std::vector<Instance>& test_set,
                                 Detector& detector,
                                 const Featurizer& featurizer,
                                 InferenceMode mode, std::mt19937_64* rng) {
  if (mode == InferenceMode::Stochastic && !rng) {
    throw Error("config", "stochastic inference requires an RNG");
  }
  StreamEnv env(featurizer);
  std::vector<Decision> decisions;
  for (const auto& inst : test_set) {
    EnvState state = env.reset(inst);
    Decision decision;
    decision.instance_id = inst.id;
    while (true) {
      const PolicyOutput out =
          policy_forward(policy, state.features, Action::Continue);
      Action action;
      if (mode == InferenceMode::Greedy) {
        action = out.probs[1] >= out.probs[0] ? Action::Stop : Action::Continue;
      } else {
        action = uniform_unit(*rng) < out.probs[1] ? Action::Stop
                                                   : Action::Continue;
      }
      const StepOutcome step = env.step(inst, state, action);
      if (step.done) {
        decision.stop_index = state.prefix_len;
        decision.forced = step.forced_stop;
        break;
      }
      state = std::move(*step.next_state);
    }
    std::span<const Post> prefix(inst.posts.data(), decision.stop_index);
    try {
      decision.prediction = detector.predict(prefix, inst.id, decision.stop_index);
    } catch (const Error& e) {
      throw Error(e.category(), "instance " + inst.id + ": " + e.what());
    }
    decisions.push_back(std::move(decision));
  }
  return decisions;
}

MetricsReport score_decisions(const std::vector<Decision>& decisions,
                              const std::vector<Instance>& test_set) {
  if (decisions.empty()) throw Error("config", "no decisions to score");

  // confusion counts per class: tp, fp, fn
  std::size_t tp[2] = {0, 0}, fp[2] = {0, 0}, fn[2] = {0, 0};
  for (const auto& d : decisions) {
    const Instance& inst = find_instance(test_set, d.instance_id);
    if (!inst.label) {
      throw Error("config", "instance " + inst.id + " has no ground truth");
    }
    const int truth = static_cast<int>(*inst.label);
    const int pred = static_cast<int>(d.prediction);
    if (pred == truth) {
      ++tp[pred];
    } else {
      ++fp[pred];
      ++fn[truth];
    }
  }

  auto scores = [&](int c) {
    ClassScores s;
    s.precision = tp[c] + fp[c] == 0
                      ? 0.0
                      : static_cast<double>(tp[c]) /
                            static_cast<double>(tp[c] + fp[c]);
    s.recall = tp[c] + fn[c] == 0 ? 0.0
                                  : static_cast<double>(tp[c]) /
                                        static_cast<double>(tp[c] + fn[c]);
    s.f1 = s.precision + s.recall == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
  };

  MetricsReport report;
  report.non_rumor = scores(0);
  report.rumor = scores(1);
  report.macro_f1 = (report.non_rumor.f1 + report.rumor.f1) / 2.0;
  report.er = early_rate(decisions, test_set);
  report.decisions = decisions;
  return report;
}

double macro_f1(const std::vector<Decision>& decisions,
                const std::vector<Instance>& test_set) {
  return score_decisions(decisions, test_set).macro_f1;
}

double early_rate(const std::vector<Decision>& decisions,
                  const std::vector<Instance>& test_set) {
  if (decisions.empty()) throw Error("config", "no decisions");
  double sum = 0.0;
  for (const auto& d : decisions) {
    const Instance& inst = find_instance(test_set, d.instance_id);
    sum += static_cast<double>(d.stop_index) /
           static_cast<double>(inst.size());
  }
  return sum / static_cast<double>(decisions.size());
}

MetricsReport first_post_baseline(Detector& detector,
                                  const std::vector<Instance>& test_set) {
  if (test_set.empty()) throw Error("config", "empty test set");
  std::vector<Decision> decisions;
  for (const auto& inst : test_set) {
    Decision d;
    d.instance_id = inst.id;
    d.stop_index = 1;
    std::span<const Post> prefix(inst.posts.data(), 1);
    d.prediction = detector.predict(prefix, inst.id, 1);
    decisions.push_back(std::move(d));
  }
  MetricsReport report = score_decisions(decisions, test_set);
  report.er.reset();  // ER is not applicable to a fixed first-post strategy
  return report;
}

std::vector<CheckpointReport> checkpoint_baseline(
    Detector& detector, const std::vector<Instance>& test_set,
    const std::vector<std::int64_t>& checkpoints_seconds) {
  if (test_set.empty()) throw Error("config", "empty test set");
  for (std::int64_t delta : checkpoints_seconds) {
    if (delta < 0) throw Error("config", "checkpoint duration must be >= 0");
  }
  std::vector<CheckpointReport> out;
  for (std::int64_t delta : checkpoints_seconds) {
    std::vector<Decision> decisions;
    for (const auto& inst : test_set) {
      const std::int64_t start = inst.posts.front().timestamp;
      std::size_t len = 1;  // at least the first post
      while (len < inst.size() &&
             inst.posts[len].timestamp - start <= delta) {
        ++len;
      }
      Decision d;
      d.instance_id = inst.id;
      d.stop_index = len;
      std::span<const Post> prefix(inst.posts.data(), len);
      d.prediction = detector.predict(prefix, inst.id, len);
      decisions.push_back(std::move(d));
    }
    out.push_back({delta, score_decisions(decisions, test_set)});
  }
  return out;
}

MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw Error("config", "no reports to aggregate");
  std::vector<double> f1s;
  std::vector<double> ers;
  for (const auto& r : reports) {
    f1s.push_back(r.macro_f1);
    if (r.er) ers.push_back(*r.er);
  }
  MetricsReport agg = reports.front();
  agg.f1_runs = stats_of(std::move(f1s));
  agg.macro_f1 = agg.f1_runs->mean;
  if (ers.size() == reports.size()) {
    agg.er_runs = stats_of(std::move(ers));
    agg.er = agg.er_runs->mean;
  }
  return agg;
}

}  // namespace eard
