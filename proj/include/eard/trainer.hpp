#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include <json.hpp>

#include "eard/experts.hpp"
#include "eard/tinynn.hpp"

namespace eard {

struct TrainConfig {
  std::size_t steps_per_iter = 200;   // K
  std::size_t total_steps = 200000;
  int gen_epochs = 4;
  int disc_epochs = 5;
  double discount = 0.99;             // gamma-bar
  double gae_lambda = 0.97;           // lambda0
  double clip_eps = 0.1;
  double entropy_coef = 0.01;         // lambda
  double w_ce = 0.7;                  // alpha
  double w_eae = 0.15;                // beta
  double w_me = 0.15;                 // gamma
  double policy_lr = 3e-4;
  double value_lr = 3e-4;
  double disc_lr = 3e-4;
  std::size_t policy_minibatch = 4;
  std::size_t disc_minibatch = 64;
  bool normalize_advantages = true;
  bool truncate_expert_at_stop = false;
  std::size_t checkpoint_every = 0;   // iterations; 0 = final only
  std::uint64_t seed = 0;

  // alpha + beta - gamma must stay positive: it is the coefficient of the
  // agent term in the combined objective.
  void validate() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

struct Transition {
  StateVector state;
  Action action = Action::Continue;
  double logprob = 0.0;  // under the behavior policy
  double value = 0.0;
  double reward = 0.0;   // -log D(s, a), always > 0
  bool done = false;
  bool forced_stop = false;
};

struct RolloutBatch {
  std::vector<Transition> transitions;  // episode boundaries via done flags
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Samples instances uniformly with replacement from the env pool, rolls
// episodes under the stochastic policy until at least `min_steps`
// transitions are collected; the final episode runs to completion.
RolloutBatch collect_rollouts(const Mlp& policy, const Mlp& value,
                              const Mlp& disc,
                              const std::vector<Instance>& env_pool,
                              const Featurizer& featurizer,
                              std::size_t min_steps, std::mt19937_64& rng);

// Backward GAE recursion per episode with terminal bootstrap V = 0, then
// optional batch normalization of the advantages.
void compute_gae(RolloutBatch& batch, double discount, double gae_lambda,
                 bool normalize);

// ---- loss/gradient kernels (shared by updates and gradient checks) -----

struct PpoSample {
  const StateVector* state = nullptr;
  Action action = Action::Continue;
  double old_logprob = 0.0;
  double advantage = 0.0;
};

struct PpoEval {
  double objective = 0.0;  // mean surrogate + entropy bonus (maximized)
  double clip_fraction = 0.0;
  double mean_entropy = 0.0;
};

// Evaluates the clipped-surrogate objective over `samples`; when `grads`
// is non-null, accumulates d(objective)/d(params) into it.
PpoEval ppo_objective(const Mlp& policy, std::span<const PpoSample> samples,
                      double clip_eps, double entropy_coef,
                      Grads* grads = nullptr);

struct ValueSample {
  const StateVector* state = nullptr;
  double target = 0.0;  // reward-to-go
};

double value_objective(const Mlp& value, std::span<const ValueSample> samples,
                       Grads* grads = nullptr);

struct DiscPair {
  const StateVector* state = nullptr;
  Action action = Action::Continue;
};

struct DiscWeights {
  double agent = 0.7;  // alpha + beta - gamma when derived from TrainConfig
  double ce = 0.7;
  double eae = 0.15;
  double me = 0.15;
};

struct DiscEval {
  double objective = 0.0;  // maximized by the discriminator update
  double mean_agent = 0.0;
  double mean_ce = 0.0;
  double mean_eae = 0.0;
  double mean_me = 0.0;
};

// Weighted four-term objective:
//   agent_w * mean[log D] over agent pairs
//   + ce_w * mean[log(1-D)] over CE pairs
//   + eae_w * mean[log(1-D)] over EAE pairs
//   - me_w * mean[log(1-D)] over ME pairs
// Empty sources contribute nothing. D is clamped before logs.
DiscEval disc_objective(const Mlp& disc, std::span<const DiscPair> agent,
                        std::span<const DiscPair> ce,
                        std::span<const DiscPair> eae,
                        std::span<const DiscPair> me, const DiscWeights& w,
                        Grads* grads = nullptr);

// ---- updates -----------------------------------------------------------

PpoEval ppo_update(Mlp& policy, AdamState& adam, const RolloutBatch& batch,
                   const TrainConfig& cfg, std::mt19937_64& rng);

double value_update(Mlp& value, AdamState& adam, const RolloutBatch& batch,
                    const TrainConfig& cfg, std::mt19937_64& rng);

// Pooled expert state-action pairs, one entry per trajectory step (truncated
// at i* when configured).
struct ExpertPairs {
  std::vector<std::pair<StateVector, Action>> ce;
  std::vector<std::pair<StateVector, Action>> eae;
  std::vector<std::pair<StateVector, Action>> me;
};

ExpertPairs pool_expert_pairs(const ExpertSets& sets, bool truncate_at_stop);

DiscEval disc_update(Mlp& disc, AdamState& adam, const RolloutBatch& batch,
                     const ExpertPairs& experts, const TrainConfig& cfg,
                     std::mt19937_64& rng);

// ---- full loop ---------------------------------------------------------

struct TrainResult {
  AgentNets nets;
  std::vector<nlohmann::json> log;  // one entry per iteration
};

// Algorithm loop: collect rollouts with implicit rewards, GAE, PPO policy
// update, value regression, discriminator ascent; repeats until
// total_steps transitions have been consumed. When `log_stream` is set,
// each iteration record is written as one JSON line. When
// `checkpoint_path` is set, checkpoints are written there (periodically if
// checkpoint_every > 0, and always at the end).
TrainResult train(const TrainConfig& cfg, const ExpertSets& experts,
                  const std::vector<Instance>& env_pool,
                  const Featurizer& featurizer,
                  std::ostream* log_stream = nullptr,
                  const std::optional<std::filesystem::path>& checkpoint_path =
                      std::nullopt);

}  // namespace eard
