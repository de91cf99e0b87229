#include "eard/stream_env.hpp"

namespace eard {

EnvState StreamEnv::reset(const Instance& instance) const {
  if (instance.posts.empty()) {
    throw Error("config", "cannot reset on empty instance: " + instance.id);
  }
  EnvState s;
  s.instance_id = instance.id;
  s.prefix_len = 1;
  s.prev_action = Action::Continue;  // a_{-1} := continue
  s.features = feat_.encode(instance.id,
                            std::span<const Post>(instance.posts.data(), 1), 0);
  return s;
}

StepOutcome StreamEnv::step(const Instance& instance, const EnvState& state,
                            Action action) const {
  StepOutcome out;
  if (action == Action::Stop) {
    out.done = true;
    return out;
  }
  if (state.prefix_len >= instance.size()) {
    // Continue at the last post: forced termination.
    out.done = true;
    out.forced_stop = true;
    return out;
  }
  EnvState next;
  next.instance_id = state.instance_id;
  next.prefix_len = state.prefix_len + 1;
  next.prev_action = Action::Continue;
  next.features = feat_.encode(
      instance.id,
      std::span<const Post>(instance.posts.data(), next.prefix_len), 0);
  out.next_state = std::move(next);
  return out;
}

}  // namespace eard
