#include "eard/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "eard/rng.hpp"

namespace eard {

void TrainConfig::validate() const {
  if (discount <= 0.0 || discount >= 1.0) {
    throw Error("config", "discount must be in (0, 1)");
  }
  if (gae_lambda <= 0.0 || gae_lambda >= 1.0) {
    throw Error("config", "gae_lambda must be in (0, 1)");
  }
  if (clip_eps <= 0.0 || clip_eps >= 1.0) {
    throw Error("config", "clip_eps must be in (0, 1)");
  }
  if (w_ce < 0.0 || w_eae < 0.0 || w_me < 0.0) {
    throw Error("config", "expert weights must be non-negative");
  }
  if (w_ce + w_eae - w_me <= 0.0) {
    throw Error("config", "alpha + beta - gamma must be positive");
  }
  if (steps_per_iter == 0 || total_steps == 0) {
    throw Error("config", "step counts must be positive");
  }
  if (policy_minibatch == 0 || disc_minibatch == 0) {
    throw Error("config", "minibatch sizes must be positive");
  }
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.steps_per_iter = j.value("steps_per_iter", c.steps_per_iter);
  c.total_steps = j.value("total_steps", c.total_steps);
  c.gen_epochs = j.value("gen_epochs", c.gen_epochs);
  c.disc_epochs = j.value("disc_epochs", c.disc_epochs);
  c.discount = j.value("discount", c.discount);
  c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
  c.clip_eps = j.value("clip_eps", c.clip_eps);
  c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
  c.w_ce = j.value("w_ce", c.w_ce);
  c.w_eae = j.value("w_eae", c.w_eae);
  c.w_me = j.value("w_me", c.w_me);
  c.policy_lr = j.value("policy_lr", c.policy_lr);
  c.value_lr = j.value("value_lr", c.value_lr);
  c.disc_lr = j.value("disc_lr", c.disc_lr);
  c.policy_minibatch = j.value("policy_minibatch", c.policy_minibatch);
  c.disc_minibatch = j.value("disc_minibatch", c.disc_minibatch);
  c.normalize_advantages = j.value("normalize_advantages", c.normalize_advantages);
  c.truncate_expert_at_stop =
      j.value("truncate_expert_at_stop", c.truncate_expert_at_stop);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"steps_per_iter", c.steps_per_iter},
          {"total_steps", c.total_steps},
          {"gen_epochs", c.gen_epochs},
          {"disc_epochs", c.disc_epochs},
          {"discount", c.discount},
          {"gae_lambda", c.gae_lambda},
          {"clip_eps", c.clip_eps},
          {"entropy_coef", c.entropy_coef},
          {"w_ce", c.w_ce},
          {"w_eae", c.w_eae},
          {"w_me", c.w_me},
          {"policy_lr", c.policy_lr},
          {"value_lr", c.value_lr},
          {"disc_lr", c.disc_lr},
          {"policy_minibatch", c.policy_minibatch},
          {"disc_minibatch", c.disc_minibatch},
          {"normalize_advantages", c.normalize_advantages},
          {"truncate_expert_at_stop", c.truncate_expert_at_stop},
          {"checkpoint_every", c.checkpoint_every},
          {"seed", c.seed}};
}

RolloutBatch collect_rollouts(const Mlp& policy, const Mlp& value,
                              const Mlp& disc,
                              const std::vector<Instance>& env_pool,
                              const Featurizer& featurizer,
                              std::size_t min_steps, std::mt19937_64& rng) {
  if (env_pool.empty()) throw Error("config", "env pool is empty");
  StreamEnv env(featurizer);
  RolloutBatch batch;
  while (batch.transitions.size() < min_steps) {
    const Instance& inst =
        env_pool[static_cast<std::size_t>(uniform_below(rng, env_pool.size()))];
    EnvState state = env.reset(inst);
    while (true) {
      const PolicyOutput out =
          policy_forward(policy, state.features, Action::Continue);
      const Action action =
          uniform_unit(rng) < out.probs[1] ? Action::Stop : Action::Continue;

      Transition tr;
      tr.state = state.features;
      tr.action = action;
      tr.logprob = std::log(out.probs[static_cast<std::size_t>(action)]);
      tr.value = value_forward(value, state.features);
      const double d =
          clamp_probability(disc_forward(disc, state.features, action));
      tr.reward = -std::log(d);

      StepOutcome step = env.step(inst, state, action);
      tr.done = step.done;
      tr.forced_stop = step.forced_stop;
      batch.transitions.push_back(std::move(tr));
      if (step.done) break;
      state = std::move(*step.next_state);
    }
  }
  return batch;
}

void compute_gae(RolloutBatch& batch, double discount, double gae_lambda,
                 bool normalize) {
  const std::size_t n = batch.transitions.size();
  batch.advantages.assign(n, 0.0);
  batch.returns.assign(n, 0.0);

  double next_advantage = 0.0;
  double next_value = 0.0;  // V(s_terminal) = 0
  for (std::size_t t = n; t-- > 0;) {
    const Transition& tr = batch.transitions[t];
    if (tr.done) {
      next_advantage = 0.0;
      next_value = 0.0;
    }
    const double not_done = tr.done ? 0.0 : 1.0;
    const double delta =
        tr.reward + discount * next_value * not_done - tr.value;
    const double adv =
        delta + discount * gae_lambda * not_done * next_advantage;
    batch.advantages[t] = adv;
    batch.returns[t] = adv + tr.value;
    next_advantage = adv;
    next_value = tr.value;
  }

  if (normalize && n > 1) {
    double mean = 0.0;
    for (double a : batch.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    const double std_dev = std::sqrt(var / static_cast<double>(n));
    if (std_dev > 0.0) {
      for (double& a : batch.advantages) a = (a - mean) / std_dev;
    } else {
      for (double& a : batch.advantages) a = 0.0;
    }
  }
}

PpoEval ppo_objective(const Mlp& policy, std::span<const PpoSample> samples,
                      double clip_eps, double entropy_coef, Grads* grads) {
  if (samples.empty()) throw Error("config", "empty PPO minibatch");
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  PpoEval eval;
  Activations cache;
  for (const PpoSample& s : samples) {
    const PolicyOutput out =
        policy_forward(policy, *s.state, s.action, grads ? &cache : nullptr);
    const double ratio = std::exp(out.logprob - s.old_logprob);
    const double clipped =
        std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double surr1 = ratio * s.advantage;
    const double surr2 = clipped * s.advantage;
    eval.objective += (std::min(surr1, surr2) + entropy_coef * out.entropy) * inv_n;
    eval.mean_entropy += out.entropy * inv_n;
    if (surr2 < surr1) eval.clip_fraction += inv_n;

    if (grads) {
      // d(surrogate)/d(new logprob) is ratio*A on the unclipped branch,
      // zero when the clipped term is the binding minimum
      const double d_logprob = surr1 <= surr2 ? ratio * s.advantage : 0.0;
      const std::size_t a = static_cast<std::size_t>(s.action);
      std::array<double, 2> d_logits{};
      for (std::size_t j = 0; j < 2; ++j) {
        const double d_lp = (j == a ? 1.0 : 0.0) - out.probs[j];
        const double d_ent = -out.probs[j] * (std::log(out.probs[j]) + out.entropy);
        d_logits[j] = (d_logprob * d_lp + entropy_coef * d_ent) * inv_n;
      }
      accumulate_backward(policy, cache, d_logits, *grads);
    }
  }
  return eval;
}

double value_objective(const Mlp& value, std::span<const ValueSample> samples,
                       Grads* grads) {
  if (samples.empty()) throw Error("config", "empty value minibatch");
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  Activations cache;
  for (const ValueSample& s : samples) {
    const double v = value_forward(value, *s.state, grads ? &cache : nullptr);
    const double err = v - s.target;
    loss += err * err * inv_n;
    if (grads) {
      const double d_out[1] = {2.0 * err * inv_n};
      accumulate_backward(value, cache, d_out, *grads);
    }
  }
  return loss;
}

namespace {

struct DiscTermAccum {
  double log_sum = 0.0;
  double d_sum = 0.0;
};

// weight applies to mean[log D] when agent_side, else to mean[log(1-D)];
// gradient of the weighted mean lands in `grads` when non-null.
DiscTermAccum disc_term(const Mlp& disc, std::span<const DiscPair> pairs,
                        double weight, bool agent_side, Grads* grads) {
  DiscTermAccum acc;
  if (pairs.empty()) return acc;
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  Activations cache;
  for (const DiscPair& p : pairs) {
    const double d_raw =
        disc_forward(disc, *p.state, p.action, grads ? &cache : nullptr);
    const double d = clamp_probability(d_raw);
    acc.d_sum += d_raw;
    acc.log_sum += agent_side ? std::log(d) : std::log(1.0 - d);
    if (grads) {
      // through sigmoid: d log D/dz = 1-D, d log(1-D)/dz = -D;
      // zero where the clamp is active
      double dz = 0.0;
      if (d_raw > 1e-8 && d_raw < 1.0 - 1e-8) {
        dz = agent_side ? (1.0 - d_raw) : -d_raw;
      }
      const double d_out[1] = {weight * dz * inv_n};
      accumulate_backward(disc, cache, d_out, *grads);
    }
  }
  return acc;
}

double safe_mean(double sum, std::size_t n) {
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

DiscEval disc_objective(const Mlp& disc, std::span<const DiscPair> agent,
                        std::span<const DiscPair> ce,
                        std::span<const DiscPair> eae,
                        std::span<const DiscPair> me, const DiscWeights& w,
                        Grads* grads) {
  DiscEval eval;
  const DiscTermAccum a = disc_term(disc, agent, w.agent, true, grads);
  const DiscTermAccum c = disc_term(disc, ce, w.ce, false, grads);
  const DiscTermAccum e = disc_term(disc, eae, w.eae, false, grads);
  const DiscTermAccum m = disc_term(disc, me, -w.me, false, grads);
  eval.objective = w.agent * safe_mean(a.log_sum, agent.size()) +
                   w.ce * safe_mean(c.log_sum, ce.size()) +
                   w.eae * safe_mean(e.log_sum, eae.size()) -
                   w.me * safe_mean(m.log_sum, me.size());
  eval.mean_agent = safe_mean(a.d_sum, agent.size());
  eval.mean_ce = safe_mean(c.d_sum, ce.size());
  eval.mean_eae = safe_mean(e.d_sum, eae.size());
  eval.mean_me = safe_mean(m.d_sum, me.size());
  return eval;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle_indices(idx, rng);
  return idx;
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw Error("config", std::string("non-finite ") + what + "; training halts");
  }
}

}  // namespace

PpoEval ppo_update(Mlp& policy, AdamState& adam, const RolloutBatch& batch,
                   const TrainConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = batch.transitions.size();
  PpoEval total;
  std::size_t evals = 0;
  for (int epoch = 0; epoch < cfg.gen_epochs; ++epoch) {
    const auto order = shuffled_indices(n, rng);
    for (std::size_t start = 0; start < n; start += cfg.policy_minibatch) {
      const std::size_t end = std::min(start + cfg.policy_minibatch, n);
      std::vector<PpoSample> samples;
      samples.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const Transition& tr = batch.transitions[order[i]];
        samples.push_back({&tr.state, tr.action, tr.logprob,
                           batch.advantages[order[i]]});
      }
      Grads grads = make_grads(policy);
      const PpoEval eval =
          ppo_objective(policy, samples, cfg.clip_eps, cfg.entropy_coef, &grads);
      check_finite(eval.objective, "PPO objective");
      grads.scale(-1.0);  // ascent
      adam_step(policy, grads, adam, cfg.policy_lr);
      total.objective += eval.objective;
      total.clip_fraction += eval.clip_fraction;
      total.mean_entropy += eval.mean_entropy;
      ++evals;
    }
  }
  if (evals > 0) {
    total.objective /= static_cast<double>(evals);
    total.clip_fraction /= static_cast<double>(evals);
    total.mean_entropy /= static_cast<double>(evals);
  }
  return total;
}

double value_update(Mlp& value, AdamState& adam, const RolloutBatch& batch,
                    const TrainConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = batch.transitions.size();
  double total_loss = 0.0;
  std::size_t evals = 0;
  for (int epoch = 0; epoch < cfg.gen_epochs; ++epoch) {
    const auto order = shuffled_indices(n, rng);
    for (std::size_t start = 0; start < n; start += cfg.policy_minibatch) {
      const std::size_t end = std::min(start + cfg.policy_minibatch, n);
      std::vector<ValueSample> samples;
      samples.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const Transition& tr = batch.transitions[order[i]];
        samples.push_back({&tr.state, batch.returns[order[i]]});
      }
      Grads grads = make_grads(value);
      const double loss = value_objective(value, samples, &grads);
      check_finite(loss, "value loss");
      adam_step(value, grads, adam, cfg.value_lr);
      total_loss += loss;
      ++evals;
    }
  }
  return evals > 0 ? total_loss / static_cast<double>(evals) : 0.0;
}

ExpertPairs pool_expert_pairs(const ExpertSets& sets, bool truncate_at_stop) {
  ExpertPairs pairs;
  auto pool = [&](const std::vector<ExpertTrajectory>& set,
                  std::vector<std::pair<StateVector, Action>>& out) {
    for (const auto& traj : set) {
      const std::size_t last =
          truncate_at_stop ? traj.stop_index : traj.steps.size() - 1;
      for (std::size_t j = 0; j <= last && j < traj.steps.size(); ++j) {
        out.emplace_back(traj.steps[j].state, traj.steps[j].action);
      }
    }
  };
  pool(sets.ce, pairs.ce);
  pool(sets.eae, pairs.eae);
  pool(sets.me, pairs.me);
  return pairs;
}

DiscEval disc_update(Mlp& disc, AdamState& adam, const RolloutBatch& batch,
                     const ExpertPairs& experts, const TrainConfig& cfg,
                     std::mt19937_64& rng) {
  const std::size_t n = batch.transitions.size();
  const DiscWeights weights{cfg.w_ce + cfg.w_eae - cfg.w_me, cfg.w_ce,
                            cfg.w_eae, cfg.w_me};

  auto draw = [&](const std::vector<std::pair<StateVector, Action>>& pool,
                  std::size_t count) {
    std::vector<DiscPair> out;
    if (pool.empty()) return out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& p =
          pool[static_cast<std::size_t>(uniform_below(rng, pool.size()))];
      out.push_back({&p.first, p.second});
    }
    return out;
  };

  DiscEval total;
  std::size_t evals = 0;
  for (int epoch = 0; epoch < cfg.disc_epochs; ++epoch) {
    const auto order = shuffled_indices(n, rng);
    for (std::size_t start = 0; start < n; start += cfg.disc_minibatch) {
      const std::size_t end = std::min(start + cfg.disc_minibatch, n);
      std::vector<DiscPair> agent;
      agent.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const Transition& tr = batch.transitions[order[i]];
        agent.push_back({&tr.state, tr.action});
      }
      const auto ce = draw(experts.ce, agent.size());
      const auto eae = draw(experts.eae, agent.size());
      const auto me = draw(experts.me, agent.size());

      Grads grads = make_grads(disc);
      const DiscEval eval =
          disc_objective(disc, agent, ce, eae, me, weights, &grads);
      check_finite(eval.objective, "discriminator objective");
      grads.scale(-1.0);  // ascent
      adam_step(disc, grads, adam, cfg.disc_lr);

      total.objective += eval.objective;
      total.mean_agent += eval.mean_agent;
      total.mean_ce += eval.mean_ce;
      total.mean_eae += eval.mean_eae;
      total.mean_me += eval.mean_me;
      ++evals;
    }
  }
  if (evals > 0) {
    const double inv = 1.0 / static_cast<double>(evals);
    total.objective *= inv;
    total.mean_agent *= inv;
    total.mean_ce *= inv;
    total.mean_eae *= inv;
    total.mean_me *= inv;
  }
  return total;
}

TrainResult train(const TrainConfig& cfg, const ExpertSets& experts,
                  const std::vector<Instance>& env_pool,
                  const Featurizer& featurizer, std::ostream* log_stream,
                  const std::optional<std::filesystem::path>& checkpoint_path) {
  cfg.validate();
  if (cfg.w_me > 0.0 && experts.me.empty()) {
    std::cerr << "warning: ME expert set is empty; its loss term is dropped\n";
  }
  if (cfg.w_ce > 0.0 && experts.ce.empty() && cfg.w_eae > 0.0 &&
      experts.eae.empty()) {
    throw Error("config", "no CE or EAE expert trajectories to imitate");
  }

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.nets = make_agent_nets(featurizer.state_dim(), rng);
  const ExpertPairs pairs =
      pool_expert_pairs(experts, cfg.truncate_expert_at_stop);

  std::size_t steps_done = 0;
  std::size_t iteration = 0;
  while (steps_done < cfg.total_steps) {
    ++iteration;
    RolloutBatch batch =
        collect_rollouts(result.nets.policy, result.nets.value,
                         result.nets.disc, env_pool, featurizer,
                         cfg.steps_per_iter, rng);
    compute_gae(batch, cfg.discount, cfg.gae_lambda, cfg.normalize_advantages);

    PpoEval policy_eval;
    double value_loss = 0.0;
    DiscEval disc_eval;
    try {
      policy_eval = ppo_update(result.nets.policy, result.nets.policy_adam,
                               batch, cfg, rng);
      value_loss = value_update(result.nets.value, result.nets.value_adam,
                                batch, cfg, rng);
      disc_eval = disc_update(result.nets.disc, result.nets.disc_adam, batch,
                              pairs, cfg, rng);
    } catch (const Error& e) {
      throw Error(e.category(), "iteration " + std::to_string(iteration) +
                                    ": " + e.what());
    }

    std::size_t episodes = 0;
    double stop_index_sum = 0.0;
    double reward_sum = 0.0;
    for (const Transition& tr : batch.transitions) {
      reward_sum += tr.reward;
      if (tr.done) {
        ++episodes;
        stop_index_sum += static_cast<double>(tr.state.prefix_len - 1);
      }
    }
    steps_done += batch.transitions.size();

    nlohmann::json entry{
        {"iteration", iteration},
        {"steps", batch.transitions.size()},
        {"total_steps", steps_done},
        {"episodes", episodes},
        {"mean_episode_len",
         static_cast<double>(batch.transitions.size()) /
             static_cast<double>(episodes)},
        {"mean_stop_index", stop_index_sum / static_cast<double>(episodes)},
        {"mean_reward",
         reward_sum / static_cast<double>(batch.transitions.size())},
        {"entropy", policy_eval.mean_entropy},
        {"clip_fraction", policy_eval.clip_fraction},
        {"ppo_objective", policy_eval.objective},
        {"value_loss", value_loss},
        {"disc_objective", disc_eval.objective},
        {"d_agent", disc_eval.mean_agent},
        {"d_ce", disc_eval.mean_ce},
        {"d_eae", disc_eval.mean_eae},
        {"d_me", disc_eval.mean_me}};
    if (log_stream) *log_stream << entry.dump() << "\n";
    result.log.push_back(std::move(entry));

    if (checkpoint_path && cfg.checkpoint_every > 0 &&
        iteration % cfg.checkpoint_every == 0) {
      save_checkpoint(result.nets, *checkpoint_path);
    }
  }
  if (checkpoint_path) save_checkpoint(result.nets, *checkpoint_path);
  return result;
}

}  // namespace eard
