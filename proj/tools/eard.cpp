#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eard/corpus.hpp"
#include "eard/detector.hpp"
#include "eard/evalkit.hpp"
#include "eard/experts.hpp"
#include "eard/featurizer.hpp"
#include "eard/synth.hpp"
#include "eard/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  fs::path train_dataset;
  fs::path test_dataset;
  eard::FeaturizerSpec featurizer;
  std::string detector_kind = "oracle";  // oracle | llm | cache
  fs::path oracle_params_path;
  std::string llm_url;
  std::string llm_model;
  int llm_max_retries = 3;
  fs::path cache_path;
  eard::TrainConfig train;
  std::size_t shots = 50;
  std::size_t env_pool = 100;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  fs::path out_dir;
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw eard::Error("config", "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw eard::Error("parse", path.string() + ": " + e.what());
  }
}

eard::OracleParams oracle_params_from_json(const json& j) {
  eard::OracleParams params;
  try {
    params.flip_period = j.value("flip_period", std::size_t{1});
    for (const auto& [id, entry] : j.at("instances").items()) {
      eard::OracleParams::Entry e;
      e.reveal = entry.at("reveal").get<std::size_t>();
      e.truth = static_cast<eard::Label>(entry.at("truth").get<int>());
      params.instances[id] = e;
    }
  } catch (const json::exception& e) {
    throw eard::Error("schema", std::string("oracle params: ") + e.what());
  }
  if (params.flip_period < 1) {
    throw eard::Error("config", "flip_period must be >= 1");
  }
  return params;
}

json oracle_params_to_json(const eard::OracleParams& params) {
  json j;
  j["flip_period"] = params.flip_period;
  j["instances"] = json::object();
  for (const auto& [id, e] : params.instances) {
    j["instances"][id] = {{"reveal", e.reveal},
                          {"truth", static_cast<int>(e.truth)}};
  }
  return j;
}

RunConfig load_config(const std::string& config_path) {
  RunConfig cfg;
  if (config_path.empty()) return cfg;
  const json j = read_json_file(config_path);
  try {
    if (j.contains("train_dataset")) {
      cfg.train_dataset = j.at("train_dataset").get<std::string>();
    }
    if (j.contains("test_dataset")) {
      cfg.test_dataset = j.at("test_dataset").get<std::string>();
    }
    if (j.contains("featurizer")) {
      const auto& f = j.at("featurizer");
      const std::string mode = f.value("mode", std::string("hashed"));
      if (mode == "hashed") {
        cfg.featurizer.mode = eard::FeaturizerMode::HashedBagOfWords;
      } else if (mode == "embeddings") {
        cfg.featurizer.mode = eard::FeaturizerMode::PrecomputedEmbeddings;
      } else {
        throw eard::Error("config", "unknown featurizer mode: " + mode);
      }
      cfg.featurizer.dim = f.value("dim", std::size_t{256});
      if (f.contains("embedding_path")) {
        cfg.featurizer.embedding_path =
            fs::path(f.at("embedding_path").get<std::string>());
      }
    }
    if (j.contains("detector")) {
      const auto& d = j.at("detector");
      cfg.detector_kind = d.value("kind", std::string("oracle"));
      if (d.contains("oracle_params")) {
        cfg.oracle_params_path = d.at("oracle_params").get<std::string>();
      }
      cfg.llm_url = d.value("url", std::string());
      cfg.llm_model = d.value("model", std::string());
      cfg.llm_max_retries = d.value("max_retries", 3);
      if (d.contains("cache")) {
        cfg.cache_path = d.at("cache").get<std::string>();
      }
    }
    if (j.contains("train")) {
      cfg.train = eard::train_config_from_json(j.at("train"));
    }
    cfg.shots = j.value("shots", cfg.shots);
    cfg.env_pool = j.value("env_pool", cfg.env_pool);
    if (j.contains("seeds")) {
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    }
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw eard::Error("schema", std::string("config: ") + e.what());
  }
  return cfg;
}

std::unique_ptr<eard::Detector> build_detector(const RunConfig& cfg) {
  eard::DetectorSpec spec;
  if (cfg.detector_kind == "oracle") {
    spec.kind = eard::DetectorKind::SyntheticOracle;
    if (cfg.oracle_params_path.empty()) {
      throw eard::Error("config",
                        "oracle detector needs detector.oracle_params");
    }
    spec.oracle = oracle_params_from_json(read_json_file(cfg.oracle_params_path));
  } else if (cfg.detector_kind == "llm") {
    spec.kind = eard::DetectorKind::HttpLLM;
    eard::HttpParams http;
    http.url = cfg.llm_url;
    http.model = cfg.llm_model;
    http.max_retries = cfg.llm_max_retries;
    spec.endpoint = http;
  } else if (cfg.detector_kind == "cache") {
    spec.kind = eard::DetectorKind::CachedTrace;
  } else {
    throw eard::Error("config", "unknown detector kind: " + cfg.detector_kind);
  }
  if (!cfg.cache_path.empty()) spec.cache_path = cfg.cache_path;
  return eard::make_detector(spec);
}

// Durations like "1h", "30m", "90s", or plain seconds.
std::int64_t parse_duration(const std::string& text) {
  if (text.empty()) throw eard::Error("config", "empty duration");
  std::int64_t mult = 1;
  std::string digits = text;
  switch (text.back()) {
    case 'h': mult = 3600; digits.pop_back(); break;
    case 'm': mult = 60; digits.pop_back(); break;
    case 's': mult = 1; digits.pop_back(); break;
    default: break;
  }
  if (digits.empty() ||
      digits.find_first_not_of("0123456789") != std::string::npos) {
    throw eard::Error("config", "bad duration: " + text);
  }
  return std::stoll(digits) * mult;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw eard::Error("io", "cannot write " + path.string());
  out << content;
}

fs::path ckpt_path(const RunConfig& cfg, std::uint64_t seed) {
  return cfg.out_dir / ("ckpt_seed" + std::to_string(seed) + ".json");
}

// ---- subcommands -------------------------------------------------------

int cmd_ingest(const fs::path& dataset) {
  const auto instances = eard::load_dataset(dataset);
  if (instances.empty()) {
    throw eard::Error("schema", dataset.string() + ": no instances");
  }
  std::size_t posts = 0, labeled = 0, rumors = 0;
  for (const auto& inst : instances) {
    posts += inst.posts.size();
    if (inst.label) {
      ++labeled;
      if (*inst.label == eard::Label::Rumor) ++rumors;
    }
  }
  json summary;
  summary["instances"] = instances.size();
  summary["posts"] = posts;
  summary["labeled"] = labeled;
  summary["rumors"] = rumors;
  summary["non_rumors"] = labeled - rumors;
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_cache(const RunConfig& cfg) {
  if (cfg.cache_path.empty()) {
    throw eard::Error("config", "cache command needs detector.cache");
  }
  const auto instances = eard::load_dataset(cfg.train_dataset);
  auto detector = build_detector(cfg);
  std::size_t traced = 0, skipped = 0;
  for (const auto& inst : instances) {
    if (!inst.label) continue;
    if (detector->has_cached(inst.id)) {
      ++skipped;
      continue;
    }
    detector->trace_instance(inst);
    ++traced;
  }
  json summary;
  summary["traced"] = traced;
  summary["skipped"] = skipped;
  summary["cache"] = cfg.cache_path.string();
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.env_pool == 0) {
    throw eard::Error("config", "env pool must be non-empty");
  }
  if (cfg.out_dir.empty()) {
    throw eard::Error("config", "train needs an output directory (--out)");
  }
  fs::create_directories(cfg.out_dir);
  const auto dataset = eard::load_dataset(cfg.train_dataset);
  const eard::Featurizer featurizer(cfg.featurizer);
  auto detector = build_detector(cfg);

  for (const std::uint64_t seed : cfg.seeds) {
    auto split = eard::sample_few_shot(dataset, cfg.shots, cfg.env_pool, seed);
    auto experts = eard::generate_all(split.labeled, *detector, featurizer);

    eard::TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seed;
    train_cfg.validate();

    const fs::path log_path =
        cfg.out_dir / ("train_seed" + std::to_string(seed) + ".jsonl");
    std::ofstream log_stream(log_path);
    if (!log_stream) {
      throw eard::Error("io", "cannot write " + log_path.string());
    }
    auto result = eard::train(train_cfg, experts, split.env_pool, featurizer,
                              &log_stream, ckpt_path(cfg, seed));
    json line;
    line["seed"] = seed;
    line["iterations"] = result.log.size();
    line["checkpoint"] = ckpt_path(cfg, seed).string();
    std::cout << line.dump() << "\n";
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& train_name,
             const std::string& test_name) {
  const auto test_set = eard::load_dataset(cfg.test_dataset);
  const eard::Featurizer featurizer(cfg.featurizer);
  auto detector = build_detector(cfg);

  std::vector<eard::MetricsReport> runs;
  for (const std::uint64_t seed : cfg.seeds) {
    const fs::path path = ckpt_path(cfg, seed);
    if (!fs::exists(path)) {
      throw eard::Error("io", "missing checkpoint " + path.string());
    }
    auto nets = eard::load_checkpoint(path);
    auto decisions = eard::run_policy(nets.policy, test_set, *detector,
                                      featurizer, eard::InferenceMode::Greedy);
    runs.push_back(eard::score_decisions(decisions, test_set));
  }
  auto aggregate = eard::aggregate_runs(runs);

  json report = eard::report_to_json(aggregate);
  report["seeds"] = cfg.seeds;
  if (!train_name.empty()) report["train_dataset"] = train_name;
  if (!test_name.empty()) report["test_dataset"] = test_name;
  report["runs"] = json::array();
  for (const auto& run : runs) {
    report["runs"].push_back(eard::report_to_json(run));
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / "eval_report.json", report.dump(2) + "\n");
  }
  json summary;
  summary["macro_f1"] = aggregate.macro_f1;
  if (aggregate.er) summary["er"] = *aggregate.er;
  if (aggregate.f1_runs) summary["f1_std"] = aggregate.f1_runs->std_dev;
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_baseline(const RunConfig& cfg, const std::string& strategy,
                 const std::vector<std::string>& checkpoint_strs) {
  const auto test_set = eard::load_dataset(cfg.test_dataset);
  auto detector = build_detector(cfg);

  json report;
  report["strategy"] = strategy;
  if (strategy == "first-post") {
    auto metrics = eard::first_post_baseline(*detector, test_set);
    report["report"] = eard::report_to_json(metrics);
    report["er"] = "n/a";
  } else if (strategy == "checkpoints") {
    std::vector<std::int64_t> deltas;
    for (const auto& s : checkpoint_strs) deltas.push_back(parse_duration(s));
    auto series = eard::checkpoint_baseline(*detector, test_set, deltas);
    report["checkpoints"] = json::array();
    for (const auto& entry : series) {
      json item;
      item["delta_seconds"] = entry.checkpoint_seconds;
      item["report"] = eard::report_to_json(entry.report);
      report["checkpoints"].push_back(item);
    }
  } else {
    throw eard::Error("config", "unknown strategy: " + strategy);
  }
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / "baseline_report.json", report.dump(2) + "\n");
  }
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_synth(const fs::path& out_dir, std::size_t instances,
              std::size_t posts, std::uint64_t seed) {
  eard::SyntheticConfig synth_cfg;
  synth_cfg.num_instances = instances;
  synth_cfg.posts_per_instance = posts;
  synth_cfg.seed = seed;
  auto corpus = eard::make_synthetic_corpus(synth_cfg);

  fs::create_directories(out_dir);
  // 3:1 train/test split preserving label balance (ids alternate labels)
  const std::size_t split = instances - instances / 4;
  std::vector<eard::Instance> train(corpus.instances.begin(),
                                    corpus.instances.begin() + split);
  std::vector<eard::Instance> test(corpus.instances.begin() + split,
                                   corpus.instances.end());
  eard::save_dataset(train, out_dir / "train.jsonl");
  eard::save_dataset(test, out_dir / "test.jsonl");
  write_text(out_dir / "reveal.json",
             oracle_params_to_json(corpus.oracle).dump(2) + "\n");

  json summary;
  summary["train"] = train.size();
  summary["test"] = test.size();
  summary["out"] = out_dir.string();
  std::cout << summary.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot early rumor detection: training and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration file")
      ->expected(1);

  // flag overrides shared by the data-driven subcommands
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::vector<std::uint64_t>> seeds_flag;
  std::optional<std::size_t> shots_flag;
  std::optional<std::size_t> env_pool_flag;
  std::optional<std::string> detector_flag;
  std::optional<std::string> out_flag;
  std::optional<std::size_t> total_steps_flag;
  std::optional<std::string> train_dataset_flag;
  std::optional<std::string> test_dataset_flag;
  std::optional<std::string> cache_flag;
  std::optional<std::string> oracle_params_flag;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_flag, "single seed");
    cmd->add_option("--seeds", seeds_flag, "comma-separated seed list")
        ->delimiter(',');
    cmd->add_option("--shots", shots_flag, "labeled instances per split");
    cmd->add_option("--env-pool", env_pool_flag, "unlabeled env-pool size");
    cmd->add_option("--detector", detector_flag, "oracle|llm|cache")
        ->check(CLI::IsMember({"oracle", "llm", "cache"}));
    cmd->add_option("--out", out_flag, "output directory");
    cmd->add_option("--total-steps", total_steps_flag, "training step budget");
    cmd->add_option("--train-dataset", train_dataset_flag, "train JSONL path");
    cmd->add_option("--test-dataset", test_dataset_flag, "test JSONL path");
    cmd->add_option("--cache", cache_flag, "trace cache file");
    cmd->add_option("--oracle-params", oracle_params_flag,
                    "oracle reveal/truth JSON file");
  };

  auto* ingest = app.add_subcommand("ingest", "validate and summarize a dataset");
  std::string ingest_dataset;
  ingest->add_option("dataset", ingest_dataset, "JSONL dataset path")
      ->required();

  auto* cache = app.add_subcommand("cache", "precompute detector traces");
  add_common(cache);

  auto* train = app.add_subcommand("train", "train stop policies per seed");
  add_common(train);

  auto* eval = app.add_subcommand("eval", "evaluate checkpoints on a test set");
  add_common(eval);

  auto* baseline = app.add_subcommand("baseline", "non-learned baselines");
  add_common(baseline);
  std::string strategy = "checkpoints";
  baseline->add_option("--strategy", strategy, "first-post|checkpoints")
      ->check(CLI::IsMember({"first-post", "checkpoints"}));
  std::vector<std::string> checkpoint_strs = {"1h", "6h", "12h", "24h", "36h"};
  baseline->add_option("--checkpoints", checkpoint_strs,
                       "durations, e.g. 1h,6h,12h")
      ->delimiter(',');

  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
  std::string synth_out = "synth";
  std::size_t synth_instances = 200;
  std::size_t synth_posts = 20;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--instances", synth_instances, "instance count");
  synth->add_option("--posts", synth_posts, "posts per instance");
  synth->add_option("--seed", synth_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seeds_flag) cfg.seeds = *seeds_flag;
    if (seed_flag) cfg.seeds = {*seed_flag};
    if (shots_flag) cfg.shots = *shots_flag;
    if (env_pool_flag) cfg.env_pool = *env_pool_flag;
    if (detector_flag) cfg.detector_kind = *detector_flag;
    if (out_flag) cfg.out_dir = *out_flag;
    if (total_steps_flag) cfg.train.total_steps = *total_steps_flag;
    if (train_dataset_flag) cfg.train_dataset = *train_dataset_flag;
    if (test_dataset_flag) cfg.test_dataset = *test_dataset_flag;
    if (cache_flag) cfg.cache_path = *cache_flag;
    if (oracle_params_flag) cfg.oracle_params_path = *oracle_params_flag;
    if (cfg.seeds.empty()) {
      throw eard::Error("config", "seed list must be non-empty");
    }

    if (*ingest) return cmd_ingest(ingest_dataset);
    if (*cache) return cmd_cache(cfg);
    if (*train) return cmd_train(cfg);
    if (*eval) {
      return cmd_eval(cfg,
                      train_dataset_flag ? *train_dataset_flag : std::string(),
                      test_dataset_flag ? *test_dataset_flag : std::string());
    }
    if (*baseline) return cmd_baseline(cfg, strategy, checkpoint_strs);
    if (*synth) return cmd_synth(synth_out, synth_instances, synth_posts,
                                 synth_seed);
  } catch (const eard::Error& e) {
    json err;
    err["category"] = e.category();
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err;
    err["category"] = "internal";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
