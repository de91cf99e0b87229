#pragma once

#include <optional>
#include <vector>

#include "eard/detector.hpp"
#include "eard/featurizer.hpp"
#include "eard/stream_env.hpp"

namespace eard {

enum class ExpertKind { CE, EAE, ME };

const char* expert_kind_name(ExpertKind kind);

struct ExpertStep {
  StateVector state;
  Action action = Action::Continue;
};

// Full-length expert demonstration: Continue before the stop index, Stop
// from it onward, including post-stop steps whose states carry
// prev_action = Stop.
struct ExpertTrajectory {
  std::string instance_id;
  ExpertKind kind = ExpertKind::CE;
  std::size_t stop_index = 0;  // i* in [0, N-1]
  std::vector<ExpertStep> steps;  // length N
};

// Conservative expert: earliest index from which predictions equal the
// truth and never change again. Absent iff the final prediction is wrong.
std::optional<std::size_t> ce_index(const PredictionTrace& trace, Label y);

// Early-action expert: first index whose prediction equals the truth.
std::optional<std::size_t> eae_index(const PredictionTrace& trace, Label y);

// Misleading expert: earliest index from which predictions are stable and
// wrong. Absent iff the final prediction is correct.
std::optional<std::size_t> me_index(const PredictionTrace& trace, Label y);

ExpertTrajectory build_trajectory(const Instance& instance, ExpertKind kind,
                                  std::size_t stop_index,
                                  const Featurizer& featurizer);

struct ExpertSets {
  std::vector<ExpertTrajectory> ce;
  std::vector<ExpertTrajectory> eae;
  std::vector<ExpertTrajectory> me;
};

// For each labeled instance, emits a trajectory into each set whose index
// function is defined on the instance's prediction trace. Output ordering
// follows the input instance order.
ExpertSets generate_all(const std::vector<Instance>& labeled,
                        Detector& detector, const Featurizer& featurizer);

void save_trajectories(const ExpertSets& sets,
                       const std::filesystem::path& path);
ExpertSets load_trajectories(const std::filesystem::path& path);

}  // namespace eard
