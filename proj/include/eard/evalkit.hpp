#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "eard/detector.hpp"
#include "eard/tinynn.hpp"

namespace eard {

enum class InferenceMode { Greedy, Stochastic };

struct Decision {
  std::string instance_id;
  std::size_t stop_index = 1;  // number of posts observed, 1..N
  Label prediction = Label::NonRumor;
  bool forced = false;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RunStats {
  std::vector<double> values;  // per-seed
  double mean = 0.0;
  double std_dev = 0.0;  // population
};

struct MetricsReport {
  double macro_f1 = 0.0;
  std::optional<double> er;  // absent for the first-post baseline
  ClassScores non_rumor;
  ClassScores rumor;
  std::vector<Decision> decisions;
  std::optional<RunStats> f1_runs;
  std::optional<RunStats> er_runs;
};

nlohmann::json report_to_json(const MetricsReport& report);

// Steps each instance under the policy until Stop (greedy: argmax with ties
// resolved to Stop) or forced stop, then calls the detector exactly once on
// the observed prefix.
std::vector<Decision> run_policy(const Mlp& policy,
                                 const std::vector<Instance>& test_set,
                                 Detector& detector,
                                 const Featurizer& featurizer,
                                 InferenceMode mode,
                                 std::mt19937_64* rng = nullptr);

// Per-class precision/recall/F1 with the 0/0 -> 0 convention; macro is the
// unweighted mean of the two F1 values.
MetricsReport score_decisions(const std::vector<Decision>& decisions,
                              const std::vector<Instance>& test_set);

double macro_f1(const std::vector<Decision>& decisions,
                const std::vector<Instance>& test_set);

// Mean over instances of stop_index / N.
double early_rate(const std::vector<Decision>& decisions,
                  const std::vector<Instance>& test_set);

MetricsReport first_post_baseline(Detector& detector,
                                  const std::vector<Instance>& test_set);

struct CheckpointReport {
  std::int64_t checkpoint_seconds = 0;
  MetricsReport report;
};

// Prefix per instance = posts within `delta` seconds of the first post
// (inclusive, at least the first post).
std::vector<CheckpointReport> checkpoint_baseline(
    Detector& detector, const std::vector<Instance>& test_set,
    const std::vector<std::int64_t>& checkpoints_seconds);

// Mean and population standard deviation across seeded runs.
MetricsReport aggregate_runs(const std::vector<MetricsReport>& reports);

}  // namespace eard
