#include "eard/experts.hpp"

#include <fstream>

#include <json.hpp>

namespace eard {

namespace {

// Start of the maximal trailing run equal to `target`, if the trace ends
// on `target`.
std::optional<std::size_t> trailing_run_start(const std::vector<Label>& preds,
                                              Label target) {
  if (preds.empty() || preds.back() != target) return std::nullopt;
  std::size_t k = preds.size() - 1;
  while (k > 0 && preds[k - 1] == target) --k;
  return k;
}

}  // namespace

const char* expert_kind_name(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::CE: return "CE";
    case ExpertKind::EAE: return "EAE";
    case ExpertKind::ME: return "ME";
  }
  return "?";
}

std::optional<std::size_t> ce_index(const PredictionTrace& trace, Label y) {
  return trailing_run_start(trace.preds, y);
}

std::optional<std::size_t> eae_index(const PredictionTrace& trace, Label y) {
  for (std::size_t k = 0; k < trace.preds.size(); ++k) {
    if (trace.preds[k] == y) return k;
  }
  return std::nullopt;
}

std::optional<std::size_t> me_index(const PredictionTrace& trace, Label y) {
  if (trace.preds.empty() || trace.preds.back() == y) return std::nullopt;
  return trailing_run_start(trace.preds, trace.preds.back());
}

ExpertTrajectory build_trajectory(const Instance& instance, ExpertKind kind,
                                  std::size_t stop_index,
                                  const Featurizer& featurizer) {
  const std::size_t n = instance.size();
  if (stop_index >= n) {
    throw Error("config", "stop index " + std::to_string(stop_index) +
                              " out of range for " + std::to_string(n) +
                              " posts");
  }
  ExpertTrajectory traj;
  traj.instance_id = instance.id;
  traj.kind = kind;
  traj.stop_index = stop_index;
  int prev_action = 0;  // a_{-1} := continue
  for (std::size_t j = 0; j < n; ++j) {
    ExpertStep step;
    step.state = featurizer.encode(
        instance.id, std::span<const Post>(instance.posts.data(), j + 1),
        prev_action);
    step.action = j >= stop_index ? Action::Stop : Action::Continue;
    prev_action = static_cast<int>(step.action);
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

ExpertSets generate_all(const std::vector<Instance>& labeled,
                        Detector& detector, const Featurizer& featurizer) {
  ExpertSets sets;
  for (const auto& inst : labeled) {
    if (!inst.label) {
      throw Error("config", "instance " + inst.id + " has no label");
    }
    const PredictionTrace trace = detector.trace_instance(inst);
    if (auto k = ce_index(trace, *inst.label)) {
      sets.ce.push_back(build_trajectory(inst, ExpertKind::CE, *k, featurizer));
    }
    if (auto k = eae_index(trace, *inst.label)) {
      sets.eae.push_back(build_trajectory(inst, ExpertKind::EAE, *k, featurizer));
    }
    if (auto k = me_index(trace, *inst.label)) {
      sets.me.push_back(build_trajectory(inst, ExpertKind::ME, *k, featurizer));
    }
  }
  return sets;
}

namespace {

using nlohmann::json;

void write_set(std::ofstream& out, const std::vector<ExpertTrajectory>& set) {
  for (const auto& traj : set) {
    json j;
    j["id"] = traj.instance_id;
    j["kind"] = expert_kind_name(traj.kind);
    j["i_star"] = traj.stop_index;
    json steps = json::array();
    for (const auto& step : traj.steps) {
      steps.push_back(
          {{"f", step.state.values}, {"a", static_cast<int>(step.action)}});
    }
    j["steps"] = std::move(steps);
    out << j.dump() << "\n";
  }
}

}  // namespace

void save_trajectories(const ExpertSets& sets,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write trajectory file: " + path.string());
  write_set(out, sets.ce);
  write_set(out, sets.eae);
  write_set(out, sets.me);
}

ExpertSets load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open trajectory file: " + path.string());
  ExpertSets sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("schema",
                  "trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
    ExpertTrajectory traj;
    traj.instance_id = j.at("id").get<std::string>();
    traj.stop_index = j.at("i_star").get<std::size_t>();
    const auto kind = j.at("kind").get<std::string>();
    std::size_t step_idx = 0;
    for (const auto& js : j.at("steps")) {
      ExpertStep step;
      step.state.values = js.at("f").get<std::vector<double>>();
      step.state.prefix_len = ++step_idx;
      step.action = static_cast<Action>(js.at("a").get<int>());
      step.state.prev_action =
          static_cast<int>(step.state.values.empty() ? 0 : step.state.values.back());
      traj.steps.push_back(std::move(step));
    }
    if (kind == "CE") {
      traj.kind = ExpertKind::CE;
      sets.ce.push_back(std::move(traj));
    } else if (kind == "EAE") {
      traj.kind = ExpertKind::EAE;
      sets.eae.push_back(std::move(traj));
    } else if (kind == "ME") {
      traj.kind = ExpertKind::ME;
      sets.me.push_back(std::move(traj));
    } else {
      throw Error("schema", "trajectory line " + std::to_string(line_no) +
                                ": unknown kind \"" + kind + "\"");
    }
  }
  return sets;
}

}  // namespace eard
