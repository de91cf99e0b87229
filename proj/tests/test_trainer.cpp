#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "eard/synth.hpp"
#include "eard/trainer.hpp"
#include "support/temp_dir.hpp"

using namespace eard;

namespace {

std::vector<Instance> small_pool(std::size_t count, std::size_t posts) {
  std::vector<Instance> pool;
  for (std::size_t i = 0; i < count; ++i) {
    Instance inst;
    inst.id = "p" + std::to_string(i);
    inst.label = i % 2 ? Label::Rumor : Label::NonRumor;
    for (std::size_t j = 0; j < posts; ++j) {
      inst.posts.push_back({"token" + std::to_string((i * 7 + j * 3) % 11) +
                                " filler" + std::to_string(j),
                            static_cast<std::int64_t>(j * 60)});
    }
    pool.push_back(std::move(inst));
  }
  return pool;
}

StateVector unit_state(std::size_t dim, std::mt19937_64& rng, int prev) {
  StateVector s;
  s.values.resize(dim + 1);
  double n = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    s.values[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    n += s.values[i] * s.values[i];
  }
  for (std::size_t i = 0; i < dim; ++i) s.values[i] /= std::sqrt(n);
  s.prev_action = prev;
  s.values[dim] = prev;
  s.prefix_len = 1;
  return s;
}

void zero_params(Mlp& net) {
  for (auto& layer : net.layers) {
    std::fill(layer.w.begin(), layer.w.end(), 0.0);
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
}

std::size_t param_count(const Mlp& net) {
  std::size_t n = 0;
  for (const auto& layer : net.layers) n += layer.w.size() + layer.b.size();
  return n;
}

double* param_at(Mlp& net, std::size_t flat) {
  for (auto& layer : net.layers) {
    if (flat < layer.w.size()) return &layer.w[flat];
    flat -= layer.w.size();
    if (flat < layer.b.size()) return &layer.b[flat];
    flat -= layer.b.size();
  }
  return nullptr;
}

double grad_at(const Grads& grads, std::size_t flat) {
  for (const auto& layer : grads.layers) {
    if (flat < layer.w.size()) return layer.w[flat];
    flat -= layer.w.size();
    if (flat < layer.b.size()) return layer.b[flat];
    flat -= layer.b.size();
  }
  return 0.0;
}

// Direct sum-form GAE oracle: A_t = sum_l (discount*lambda)^l delta_{t+l}
// within the episode, with V(terminal) = 0.
std::vector<double> gae_oracle(const std::vector<Transition>& ts,
                               double discount, double lambda) {
  std::vector<double> adv(ts.size(), 0.0);
  std::size_t start = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!ts[i].done) continue;
    for (std::size_t t = start; t <= i; ++t) {
      double acc = 0.0;
      double w = 1.0;
      for (std::size_t l = t; l <= i; ++l) {
        const double next_v = l == i ? 0.0 : ts[l + 1].value;
        const double delta = ts[l].reward + discount * next_v - ts[l].value;
        acc += w * delta;
        w *= discount * lambda;
      }
      adv[t] = acc;
    }
    start = i + 1;
  }
  return adv;
}

}  // namespace

TEST_CASE("config validation rejects degenerate settings") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  TrainConfig bad = cfg;
  bad.w_me = 0.9;  // alpha + beta - gamma <= 0
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = cfg;
  bad.clip_eps = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = cfg;
  bad.steps_per_iter = 0;
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = cfg;
  bad.discount = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("config json round-trip preserves every field") {
  TrainConfig cfg;
  cfg.total_steps = 1234;
  cfg.w_ce = 0.6;
  cfg.w_eae = 0.25;
  cfg.w_me = 0.1;
  cfg.seed = 99;
  cfg.normalize_advantages = false;
  cfg.checkpoint_every = 7;
  auto j = train_config_to_json(cfg);
  auto back = train_config_from_json(j);
  CHECK(back.total_steps == 1234);
  CHECK(back.w_ce == 0.6);
  CHECK(back.w_eae == 0.25);
  CHECK(back.w_me == 0.1);
  CHECK(back.seed == 99);
  CHECK(back.normalize_advantages == false);
  CHECK(back.checkpoint_every == 7);
  CHECK(back.steps_per_iter == cfg.steps_per_iter);
  CHECK(back.policy_lr == cfg.policy_lr);
}

TEST_CASE("gae: hand-unrolled two-step episode") {
  const double g = 0.9, lam = 0.5;
  RolloutBatch batch;
  Transition t0;
  t0.reward = 0.5;
  t0.value = 0.2;
  Transition t1;
  t1.reward = 1.0;
  t1.value = 0.4;
  t1.done = true;
  batch.transitions = {t0, t1};
  compute_gae(batch, g, lam, false);

  const double d1 = 1.0 + g * 0.0 - 0.4;           // 0.6
  const double d0 = 0.5 + g * 0.4 - 0.2;           // 0.66
  const double a0 = d0 + g * lam * d1;             // 0.93
  CHECK(batch.advantages[1] == doctest::Approx(d1).epsilon(1e-12));
  CHECK(batch.advantages[0] == doctest::Approx(a0).epsilon(1e-12));
  CHECK(batch.returns[0] == doctest::Approx(a0 + 0.2).epsilon(1e-12));
  CHECK(batch.returns[1] == doctest::Approx(d1 + 0.4).epsilon(1e-12));
}

TEST_CASE("gae: lambda = 0 degenerates to one-step TD errors") {
  RolloutBatch batch;
  std::mt19937_64 rng(12);
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.reward = static_cast<double>(rng() % 100) / 50.0;
    t.value = static_cast<double>(rng() % 100) / 50.0 - 1.0;
    t.done = (i == 2 || i == 5);
    batch.transitions.push_back(t);
  }
  compute_gae(batch, 0.99, 0.0, false);
  for (std::size_t t = 0; t < batch.transitions.size(); ++t) {
    const auto& tr = batch.transitions[t];
    const double next_v = tr.done ? 0.0 : batch.transitions[t + 1].value;
    const double delta = tr.reward + 0.99 * next_v - tr.value;
    CHECK(batch.advantages[t] == doctest::Approx(delta).epsilon(1e-12));
  }
}

TEST_CASE("gae recursion matches the direct sum oracle on random batches") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    RolloutBatch batch;
    const int episodes = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < episodes; ++e) {
      const int len = 1 + static_cast<int>(rng() % 8);
      for (int i = 0; i < len; ++i) {
        Transition t;
        t.reward = static_cast<double>(rng() % 1000) / 250.0;
        t.value = static_cast<double>(rng() % 1000) / 250.0 - 2.0;
        t.done = (i == len - 1);
        batch.transitions.push_back(t);
      }
    }
    const double g = 0.99, lam = 0.97;
    auto want = gae_oracle(batch.transitions, g, lam);
    compute_gae(batch, g, lam, false);
    REQUIRE(batch.advantages.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(batch.advantages[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("advantage normalization centers and scales the batch") {
  RolloutBatch batch;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    Transition t;
    t.reward = static_cast<double>(rng() % 100) / 10.0;
    t.value = 0.0;
    t.done = (i % 8 == 7);
    batch.transitions.push_back(t);
  }
  compute_gae(batch, 0.99, 0.97, true);
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= static_cast<double>(batch.advantages.size());
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(batch.advantages.size());
  CHECK(std::abs(mean) < 1e-9);
  CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rollouts: structure, rewards, and behavior-policy bookkeeping") {
  Featurizer feat({FeaturizerMode::HashedBagOfWords, 16, {}});
  auto pool = small_pool(4, 5);
  std::mt19937_64 init_rng(3);
  auto nets = make_agent_nets(17, init_rng);

  std::mt19937_64 rng(10);
  auto batch = collect_rollouts(nets.policy, nets.value, nets.disc, pool, feat,
                                50, rng);
  CHECK(batch.transitions.size() >= 50);
  CHECK(batch.transitions.back().done);

  std::size_t episode_len = 0;
  for (const auto& t : batch.transitions) {
    ++episode_len;
    CHECK(t.reward > 0.0);  // -log D with D in (0,1)
    CHECK(episode_len <= 5);
    // logprob/value recomputable from the frozen nets
    auto out = policy_forward(nets.policy, t.state, Action::Continue);
    CHECK(t.logprob ==
          doctest::Approx(std::log(out.probs[static_cast<int>(t.action)]))
              .epsilon(1e-10));
    CHECK(t.value == doctest::Approx(value_forward(nets.value, t.state))
                         .epsilon(1e-12));
    const double want_reward = -std::log(
        clamp_probability(disc_forward(nets.disc, t.state, t.action)));
    CHECK(t.reward == doctest::Approx(want_reward).epsilon(1e-10));
    if (t.done) episode_len = 0;
  }

  // same seed, same batch
  std::mt19937_64 rng2(10);
  auto batch2 = collect_rollouts(nets.policy, nets.value, nets.disc, pool,
                                 feat, 50, rng2);
  REQUIRE(batch2.transitions.size() == batch.transitions.size());
  for (std::size_t i = 0; i < batch.transitions.size(); ++i) {
    CHECK(batch2.transitions[i].state.values ==
          batch.transitions[i].state.values);
    CHECK(batch2.transitions[i].action == batch.transitions[i].action);
  }
}

TEST_CASE("a stop-biased policy yields length-1 episodes") {
  Featurizer feat({FeaturizerMode::HashedBagOfWords, 8, {}});
  auto pool = small_pool(3, 6);
  std::mt19937_64 init_rng(0);
  auto nets = make_agent_nets(9, init_rng);
  zero_params(nets.policy);
  nets.policy.layers.back().b[1] = 50.0;  // p_stop ~ 1
  std::mt19937_64 rng(1);
  auto batch = collect_rollouts(nets.policy, nets.value, nets.disc, pool, feat,
                                20, rng);
  for (const auto& t : batch.transitions) {
    CHECK(t.action == Action::Stop);
    CHECK(t.done);
    CHECK_FALSE(t.forced_stop);
  }
}

TEST_CASE("a continue-biased policy runs to the forced stop") {
  Featurizer feat({FeaturizerMode::HashedBagOfWords, 8, {}});
  auto pool = small_pool(3, 4);
  std::mt19937_64 init_rng(0);
  auto nets = make_agent_nets(9, init_rng);
  zero_params(nets.policy);
  nets.policy.layers.back().b[0] = 50.0;  // p_continue ~ 1
  std::mt19937_64 rng(1);
  auto batch = collect_rollouts(nets.policy, nets.value, nets.disc, pool, feat,
                                20, rng);
  std::size_t len = 0;
  for (const auto& t : batch.transitions) {
    ++len;
    CHECK(t.action == Action::Continue);
    if (t.done) {
      CHECK(t.forced_stop);
      CHECK(len == 4);
      len = 0;
    }
  }
}

TEST_CASE("ppo surrogate: clip arithmetic on crafted ratios") {
  std::mt19937_64 rng(2);
  Mlp policy = make_mlp(4, 2, rng);
  zero_params(policy);  // p(any action) = 0.5, ratio = 0.5 / exp(old_logprob)
  StateVector s = unit_state(3, rng, 0);

  SUBCASE("ratio 1.25, positive advantage clips at 1 + eps") {
    PpoSample sample{&s, Action::Stop, std::log(0.4), 2.0};
    auto eval = ppo_objective(policy, std::span(&sample, 1), 0.1, 0.0);
    CHECK(eval.objective == doctest::Approx(2.0 * 1.1).epsilon(1e-9));
    CHECK(eval.clip_fraction == doctest::Approx(1.0));
  }
  SUBCASE("ratio 0.8, negative advantage keeps the raw branch") {
    PpoSample sample{&s, Action::Stop, std::log(0.625), -1.0};
    auto eval = ppo_objective(policy, std::span(&sample, 1), 0.1, 0.0);
    CHECK(eval.objective == doctest::Approx(-0.9).epsilon(1e-9));
  }
  SUBCASE("ratio 1, entropy bonus only") {
    PpoSample sample{&s, Action::Continue, std::log(0.5), 0.0};
    auto eval = ppo_objective(policy, std::span(&sample, 1), 0.1, 0.01);
    CHECK(eval.objective == doctest::Approx(0.01 * std::log(2.0)).epsilon(1e-9));
    CHECK(eval.clip_fraction == doctest::Approx(0.0));
    CHECK(eval.mean_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
}

TEST_CASE("ppo gradient matches central finite differences") {
  std::mt19937_64 rng(33);
  Mlp policy = make_mlp(5, 2, rng);
  std::vector<StateVector> states;
  for (int i = 0; i < 8; ++i) states.push_back(unit_state(4, rng, i % 2));
  std::vector<PpoSample> samples;
  for (int i = 0; i < 8; ++i) {
    const Action a = i % 3 == 0 ? Action::Stop : Action::Continue;
    auto out = policy_forward(policy, states[i], Action::Continue);
    // perturb old logprobs so both clip branches appear
    const double old_lp =
        std::log(out.probs[static_cast<int>(a)]) + (i % 2 ? 0.3 : -0.3);
    samples.push_back({&states[i], a, old_lp, i % 2 ? 1.5 : -0.8});
  }
  Grads grads = make_grads(policy);
  ppo_objective(policy, samples, 0.1, 0.01, &grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t k = 0; k < param_count(policy); k += 13) {
    double* p = param_at(policy, k);
    const double orig = *p;
    *p = orig + h;
    const double up = ppo_objective(policy, samples, 0.1, 0.01).objective;
    *p = orig - h;
    const double down = ppo_objective(policy, samples, 0.1, 0.01).objective;
    *p = orig;
    const double fd = (up - down) / (2.0 * h);
    const double an = grad_at(grads, k);
    max_rel = std::max(max_rel, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("value objective: zero net gives mean squared target") {
  std::mt19937_64 rng(4);
  Mlp value = make_mlp(4, 1, rng);
  zero_params(value);
  auto s0 = unit_state(3, rng, 0);
  auto s1 = unit_state(3, rng, 1);
  std::vector<ValueSample> samples{{&s0, 2.0}, {&s1, -1.0}};
  CHECK(value_objective(value, samples) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("value gradient matches central finite differences") {
  std::mt19937_64 rng(44);
  Mlp value = make_mlp(5, 1, rng);
  std::vector<StateVector> states;
  for (int i = 0; i < 6; ++i) states.push_back(unit_state(4, rng, i % 2));
  std::vector<ValueSample> samples;
  for (int i = 0; i < 6; ++i) {
    samples.push_back({&states[i], static_cast<double>(i) - 2.5});
  }
  Grads grads = make_grads(value);
  value_objective(value, samples, &grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t k = 0; k < param_count(value); k += 13) {
    double* p = param_at(value, k);
    const double orig = *p;
    *p = orig + h;
    const double up = value_objective(value, samples);
    *p = orig - h;
    const double down = value_objective(value, samples);
    *p = orig;
    const double fd = (up - down) / (2.0 * h);
    max_rel = std::max(max_rel,
                       std::abs(fd - grad_at(grads, k)) /
                           std::max(1.0, std::abs(fd)));
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("disc objective: zero net collapses to weighted log(1/2) terms") {
  std::mt19937_64 rng(6);
  Mlp disc = make_mlp(6, 1, rng);
  zero_params(disc);
  auto s = unit_state(3, rng, 0);
  std::vector<DiscPair> agent{{&s, Action::Continue}};
  std::vector<DiscPair> ce{{&s, Action::Stop}};
  std::vector<DiscPair> eae{{&s, Action::Stop}};
  std::vector<DiscPair> me{{&s, Action::Continue}};
  DiscWeights w{0.7, 0.7, 0.15, 0.15};
  auto eval = disc_objective(disc, agent, ce, eae, me, w);
  // (0.7 + 0.7 + 0.15 - 0.15) * ln(1/2)
  CHECK(eval.objective == doctest::Approx(1.4 * std::log(0.5)).epsilon(1e-10));
  CHECK(eval.mean_agent == doctest::Approx(0.5));
  CHECK(eval.mean_me == doctest::Approx(0.5));

  // empty sources contribute nothing
  auto partial = disc_objective(disc, agent, {}, {}, {}, w);
  CHECK(partial.objective == doctest::Approx(0.7 * std::log(0.5)).epsilon(1e-10));
}

TEST_CASE("disc gradient matches central finite differences") {
  std::mt19937_64 rng(55);
  Mlp disc = make_mlp(7, 1, rng);
  std::vector<StateVector> states;
  for (int i = 0; i < 10; ++i) states.push_back(unit_state(4, rng, i % 2));
  std::vector<DiscPair> agent{{&states[0], Action::Continue},
                              {&states[1], Action::Stop},
                              {&states[2], Action::Continue}};
  std::vector<DiscPair> ce{{&states[3], Action::Stop},
                           {&states[4], Action::Continue}};
  std::vector<DiscPair> eae{{&states[5], Action::Stop}};
  std::vector<DiscPair> me{{&states[6], Action::Continue},
                           {&states[7], Action::Stop}};
  DiscWeights w{0.7, 0.7, 0.15, 0.15};

  Grads grads = make_grads(disc);
  disc_objective(disc, agent, ce, eae, me, w, &grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t k = 0; k < param_count(disc); k += 13) {
    double* p = param_at(disc, k);
    const double orig = *p;
    *p = orig + h;
    const double up = disc_objective(disc, agent, ce, eae, me, w).objective;
    *p = orig - h;
    const double down = disc_objective(disc, agent, ce, eae, me, w).objective;
    *p = orig;
    const double fd = (up - down) / (2.0 * h);
    max_rel = std::max(max_rel,
                       std::abs(fd - grad_at(grads, k)) /
                           std::max(1.0, std::abs(fd)));
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("pooling expert pairs, with and without truncation") {
  Featurizer feat({FeaturizerMode::HashedBagOfWords, 8, {}});
  Instance inst;
  inst.id = "e";
  inst.label = Label::Rumor;
  for (int i = 0; i < 4; ++i) {
    inst.posts.push_back({"w" + std::to_string(i), i});
  }
  ExpertSets sets;
  sets.ce.push_back(build_trajectory(inst, ExpertKind::CE, 1, feat));

  auto full = pool_expert_pairs(sets, false);
  CHECK(full.ce.size() == 4);
  CHECK(full.ce[0].second == Action::Continue);
  CHECK(full.ce[1].second == Action::Stop);
  CHECK(full.ce[3].second == Action::Stop);

  auto truncated = pool_expert_pairs(sets, true);
  CHECK(truncated.ce.size() == 2);  // steps 0..i*
  CHECK(truncated.ce.back().second == Action::Stop);
}

TEST_CASE("value update descends the regression objective") {
  std::mt19937_64 rng(8);
  Featurizer feat({FeaturizerMode::HashedBagOfWords, 16, {}});
  auto pool = small_pool(4, 5);
  auto nets = make_agent_nets(17, rng);
  auto batch = collect_rollouts(nets.policy, nets.value, nets.disc, pool, feat,
                                60, rng);
  compute_gae(batch, 0.99, 0.97, true);

  std::vector<ValueSample> samples;
  for (std::size_t i = 0; i < batch.transitions.size(); ++i) {
    samples.push_back({&batch.transitions[i].state, batch.returns[i]});
  }
  const double before = value_objective(nets.value, samples);
  TrainConfig cfg;
  cfg.gen_epochs = 4;
  std::mt19937_64 update_rng(1);
  value_update(nets.value, nets.value_adam, batch, cfg, update_rng);
  const double after = value_objective(nets.value, samples);
  CHECK(after < before);
}

TEST_CASE("ppo update raises the surrogate on the collected batch") {
  std::mt19937_64 rng(9);
  Featurizer feat({FeaturizerMode::HashedBagOfWords, 16, {}});
  auto pool = small_pool(4, 5);
  auto nets = make_agent_nets(17, rng);
  auto batch = collect_rollouts(nets.policy, nets.value, nets.disc, pool, feat,
                                80, rng);
  compute_gae(batch, 0.99, 0.97, true);

  std::vector<PpoSample> samples;
  for (std::size_t i = 0; i < batch.transitions.size(); ++i) {
    const auto& t = batch.transitions[i];
    samples.push_back({&t.state, t.action, t.logprob, batch.advantages[i]});
  }
  TrainConfig cfg;
  const double before =
      ppo_objective(nets.policy, samples, cfg.clip_eps, cfg.entropy_coef)
          .objective;
  std::mt19937_64 update_rng(2);
  auto eval = ppo_update(nets.policy, nets.policy_adam, batch, cfg, update_rng);
  CHECK(eval.clip_fraction >= 0.0);
  CHECK(eval.clip_fraction <= 1.0);
  const double after =
      ppo_objective(nets.policy, samples, cfg.clip_eps, cfg.entropy_coef)
          .objective;
  CHECK(after > before);
}

TEST_CASE("disc update separates agent pairs from expert pairs") {
  std::mt19937_64 rng(15);
  Featurizer feat({FeaturizerMode::HashedBagOfWords, 16, {}});
  auto pool = small_pool(4, 5);
  auto nets = make_agent_nets(17, rng);
  auto batch = collect_rollouts(nets.policy, nets.value, nets.disc, pool, feat,
                                80, rng);

  OracleParams params;
  params.flip_period = 1;
  for (const auto& inst : pool) params.instances[inst.id] = {1, *inst.label};
  OracleDetector oracle(params);
  auto sets = generate_all(pool, oracle, feat);
  auto experts = pool_expert_pairs(sets, false);

  TrainConfig cfg;
  const DiscWeights weights{cfg.w_ce + cfg.w_eae - cfg.w_me, cfg.w_ce,
                            cfg.w_eae, cfg.w_me};
  std::vector<DiscPair> agent;
  for (const auto& t : batch.transitions) agent.push_back({&t.state, t.action});
  auto pairs_of = [](const std::vector<std::pair<StateVector, Action>>& src) {
    std::vector<DiscPair> out;
    for (const auto& [s, a] : src) out.push_back({&s, a});
    return out;
  };
  const auto ce = pairs_of(experts.ce);
  const auto eae = pairs_of(experts.eae);
  const auto me = pairs_of(experts.me);

  const double before =
      disc_objective(nets.disc, agent, ce, eae, me, weights).objective;
  std::mt19937_64 update_rng(3);
  DiscEval eval;
  for (int round = 0; round < 3; ++round) {
    eval = disc_update(nets.disc, nets.disc_adam, batch, experts, cfg,
                       update_rng);
  }
  CHECK(eval.mean_agent > 0.0);
  CHECK(eval.mean_agent < 1.0);

  // ascent raises the weighted objective on the fixed evaluation pairs
  const double after =
      disc_objective(nets.disc, agent, ce, eae, me, weights).objective;
  CHECK(after > before);
}

TEST_CASE("training loop: logging, checkpointing, determinism") {
  TempDir tmp;
  SyntheticConfig synth_cfg;
  synth_cfg.num_instances = 12;
  synth_cfg.posts_per_instance = 6;
  synth_cfg.reveal_min = 2;
  synth_cfg.reveal_max = 4;
  synth_cfg.seed = 3;
  auto corpus = make_synthetic_corpus(synth_cfg);

  Featurizer feat({FeaturizerMode::HashedBagOfWords, 32, {}});
  OracleDetector oracle(corpus.oracle);
  auto sets = generate_all(corpus.instances, oracle, feat);

  TrainConfig cfg;
  cfg.total_steps = 300;
  cfg.steps_per_iter = 100;
  cfg.seed = 7;

  std::ostringstream log_a;
  auto result = train(cfg, sets, corpus.instances, feat, &log_a,
                      tmp.file("ckpt.json"));
  CHECK(result.log.size() >= 3);
  std::size_t total = 0;
  for (const auto& entry : result.log) {
    CHECK(entry.contains("iteration"));
    CHECK(entry.contains("mean_reward"));
    CHECK(entry.contains("entropy"));
    CHECK(entry.contains("d_agent"));
    CHECK(entry.at("steps").get<std::size_t>() >= cfg.steps_per_iter);
    total = entry.at("total_steps").get<std::size_t>();
  }
  CHECK(total >= cfg.total_steps);

  auto loaded = load_checkpoint(tmp.file("ckpt.json"));
  CHECK(loaded.policy.layers[0].w == result.nets.policy.layers[0].w);

  // bitwise repeatability under the same config
  std::ostringstream log_b;
  auto again = train(cfg, sets, corpus.instances, feat, &log_b, std::nullopt);
  CHECK(log_a.str() == log_b.str());
  for (std::size_t l = 0; l < result.nets.policy.layers.size(); ++l) {
    CHECK(again.nets.policy.layers[l].w == result.nets.policy.layers[l].w);
    CHECK(again.nets.disc.layers[l].w == result.nets.disc.layers[l].w);
  }
}
