#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "eard/featurizer.hpp"
#include "eard/stream_env.hpp"

namespace eard {

inline constexpr std::size_t kHiddenWidth = 64;

struct Linear {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;  // out
};

// Fixed architecture: two Tanh hidden layers of width 64, linear output.
struct Mlp {
  std::vector<Linear> layers;

  std::size_t input_dim() const { return layers.front().in; }
  std::size_t output_dim() const { return layers.back().out; }
};

// Weights uniform in (-sqrt(1/fan_in), +sqrt(1/fan_in)), biases zero.
// Bitwise reproducible for a fixed rng state.
Mlp make_mlp(std::size_t input_dim, std::size_t output_dim,
             std::mt19937_64& rng);

// Post-activation values retained by a forward pass: inputs[l] is the input
// vector fed to layer l; output is the linear head output.
struct Activations {
  std::vector<std::vector<double>> inputs;
  std::vector<double> output;
};

std::vector<double> forward(const Mlp& net, std::span<const double> x,
                            Activations* cache = nullptr);

struct Grads {
  std::vector<Linear> layers;  // same shapes as the network

  void scale(double factor);
};

Grads make_grads(const Mlp& net);

// Accumulates d(loss)/d(params) for one sample into `grads`, given
// d(loss)/d(output).
void accumulate_backward(const Mlp& net, const Activations& cache,
                         std::span<const double> d_output, Grads& grads);

struct AdamState {
  std::vector<Linear> m;
  std::vector<Linear> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const Mlp& net);

// Standard bias-corrected Adam. Throws on non-finite gradients.
void adam_step(Mlp& net, const Grads& grads, AdamState& state, double lr);

// ---- heads -------------------------------------------------------------

struct PolicyOutput {
  std::array<double, 2> probs{};  // [continue, stop]
  double logprob = 0.0;           // of the chosen action
  double entropy = 0.0;           // in [0, ln 2]
};

PolicyOutput policy_forward(const Mlp& policy, const StateVector& state,
                            Action chosen, Activations* cache = nullptr);

double value_forward(const Mlp& value, const StateVector& state,
                     Activations* cache = nullptr);

// State features concatenated with a 2-entry action one-hot.
std::vector<double> disc_input(const StateVector& state, Action action);

// Sigmoid of the single logit, strictly in (0, 1).
double disc_forward(const Mlp& disc, const StateVector& state, Action action,
                    Activations* cache = nullptr);

// Clamp into [1e-8, 1-1e-8] so log D and log(1-D) stay finite.
double clamp_probability(double d);

// ---- checkpointing -----------------------------------------------------

struct AgentNets {
  Mlp policy;
  Mlp value;
  Mlp disc;
  AdamState policy_adam;
  AdamState value_adam;
  AdamState disc_adam;
};

AgentNets make_agent_nets(std::size_t state_dim, std::mt19937_64& rng);

// Versioned JSON dump; doubles round-trip exactly.
void save_checkpoint(const AgentNets& nets, const std::filesystem::path& path);
AgentNets load_checkpoint(const std::filesystem::path& path);

}  // namespace eard
