#pragma once

#include <optional>

#include "eard/corpus.hpp"
#include "eard/featurizer.hpp"

namespace eard {

enum class Action : int { Continue = 0, Stop = 1 };

struct EnvState {
  std::string instance_id;
  std::size_t prefix_len = 1;  // number of observed posts, 1..N
  Action prev_action = Action::Continue;
  StateVector features;
};

struct StepOutcome {
  std::optional<EnvState> next_state;  // absent iff done
  bool done = false;
  bool forced_stop = false;  // episode exhausted the post stream
};

// Deterministic post-stream MDP: Continue advances the prefix by one post,
// Stop ends the episode, Continue at the last post is a forced stop.
class StreamEnv {
 public:
  explicit StreamEnv(const Featurizer& featurizer) : feat_(featurizer) {}

  EnvState reset(const Instance& instance) const;
  StepOutcome step(const Instance& instance, const EnvState& state,
                   Action action) const;

 private:
  const Featurizer& feat_;
};

}  // namespace eard
