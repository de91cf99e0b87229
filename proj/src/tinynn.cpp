#include "eard/tinynn.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "eard/error.hpp"
#include "eard/rng.hpp"

namespace eard {

namespace {

Linear zeros_like(const Linear& layer) {
  Linear z;
  z.in = layer.in;
  z.out = layer.out;
  z.w.assign(layer.w.size(), 0.0);
  z.b.assign(layer.b.size(), 0.0);
  return z;
}

}  // namespace

Mlp make_mlp(std::size_t input_dim, std::size_t output_dim,
             std::mt19937_64& rng) {
  const std::size_t widths[] = {input_dim, kHiddenWidth, kHiddenWidth,
                                output_dim};
  Mlp net;
  for (std::size_t l = 0; l + 1 < std::size(widths); ++l) {
    Linear layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.in));
    layer.w.resize(layer.in * layer.out);
    for (double& w : layer.w) w = uniform_range(rng, -bound, bound);
    layer.b.assign(layer.out, 0.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::vector<double> forward(const Mlp& net, std::span<const double> x,
                            Activations* cache) {
  if (x.size() != net.input_dim()) {
    throw Error("config", "input width " + std::to_string(x.size()) +
                              " does not match network input " +
                              std::to_string(net.input_dim()));
  }
  std::vector<double> cur(x.begin(), x.end());
  if (cache) {
    cache->inputs.clear();
    cache->inputs.reserve(net.layers.size());
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Linear& layer = net.layers[l];
    if (cache) cache->inputs.push_back(cur);
    std::vector<double> next(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double acc = layer.b[o];
      const double* row = layer.w.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * cur[i];
      next[o] = acc;
    }
    const bool is_last = l + 1 == net.layers.size();
    if (!is_last) {
      for (double& v : next) v = std::tanh(v);
    }
    cur = std::move(next);
  }
  if (cache) cache->output = cur;
  return cur;
}

void Grads::scale(double factor) {
  for (auto& layer : layers) {
    for (double& w : layer.w) w *= factor;
    for (double& b : layer.b) b *= factor;
  }
}

Grads make_grads(const Mlp& net) {
  Grads g;
  for (const auto& layer : net.layers) g.layers.push_back(zeros_like(layer));
  return g;
}

void accumulate_backward(const Mlp& net, const Activations& cache,
                         std::span<const double> d_output, Grads& grads) {
  std::vector<double> delta(d_output.begin(), d_output.end());
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const Linear& layer = net.layers[l];
    const std::vector<double>& input = cache.inputs[l];
    Linear& g = grads.layers[l];
    for (std::size_t o = 0; o < layer.out; ++o) {
      g.b[o] += delta[o];
      double* grow = g.w.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) grow[i] += delta[o] * input[i];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = layer.w.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] += row[i] * delta[o];
    }
    // the input to layer l is tanh(pre-activation of layer l-1)
    const std::vector<double>& h = cache.inputs[l];
    for (std::size_t i = 0; i < layer.in; ++i) prev[i] *= 1.0 - h[i] * h[i];
    delta = std::move(prev);
  }
}

AdamState make_adam(const Mlp& net) {
  AdamState s;
  for (const auto& layer : net.layers) {
    s.m.push_back(zeros_like(layer));
    s.v.push_back(zeros_like(layer));
  }
  return s;
}

namespace {

void adam_update_span(std::span<double> params, std::span<const double> grads,
                      std::span<double> m, std::span<double> v,
                      const AdamState& s, double lr, double bc1, double bc2) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) throw Error("config", "non-finite gradient");
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace

void adam_step(Mlp& net, const Grads& grads, AdamState& state, double lr) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, state.t);
  const double bc2 = 1.0 - std::pow(state.beta2, state.t);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    adam_update_span(net.layers[l].w, grads.layers[l].w, state.m[l].w,
                     state.v[l].w, state, lr, bc1, bc2);
    adam_update_span(net.layers[l].b, grads.layers[l].b, state.m[l].b,
                     state.v[l].b, state, lr, bc1, bc2);
  }
}

PolicyOutput policy_forward(const Mlp& policy, const StateVector& state,
                            Action chosen, Activations* cache) {
  const auto logits = forward(policy, state.values, cache);
  // shift-invariant softmax over the two logits
  const double zmax = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - zmax);
  const double e1 = std::exp(logits[1] - zmax);
  const double z = e0 + e1;
  PolicyOutput out;
  out.probs = {e0 / z, e1 / z};
  out.logprob = std::log(out.probs[static_cast<std::size_t>(chosen)]);
  out.entropy = 0.0;
  for (double p : out.probs) out.entropy -= p * std::log(p);
  return out;
}

double value_forward(const Mlp& value, const StateVector& state,
                     Activations* cache) {
  return forward(value, state.values, cache)[0];
}

std::vector<double> disc_input(const StateVector& state, Action action) {
  std::vector<double> x = state.values;
  x.push_back(action == Action::Continue ? 1.0 : 0.0);
  x.push_back(action == Action::Stop ? 1.0 : 0.0);
  return x;
}

double disc_forward(const Mlp& disc, const StateVector& state, Action action,
                    Activations* cache) {
  const auto x = disc_input(state, action);
  const double logit = forward(disc, x, cache)[0];
  return 1.0 / (1.0 + std::exp(-logit));
}

double clamp_probability(double d) {
  constexpr double lo = 1e-8;
  constexpr double hi = 1.0 - 1e-8;
  return d < lo ? lo : (d > hi ? hi : d);
}

AgentNets make_agent_nets(std::size_t state_dim, std::mt19937_64& rng) {
  AgentNets nets;
  nets.policy = make_mlp(state_dim, 2, rng);
  nets.value = make_mlp(state_dim, 1, rng);
  nets.disc = make_mlp(state_dim + 2, 1, rng);
  nets.policy_adam = make_adam(nets.policy);
  nets.value_adam = make_adam(nets.value);
  nets.disc_adam = make_adam(nets.disc);
  return nets;
}

namespace {

using nlohmann::json;

json linear_to_json(const Linear& layer) {
  return {{"in", layer.in}, {"out", layer.out}, {"w", layer.w}, {"b", layer.b}};
}

Linear linear_from_json(const json& j) {
  Linear layer;
  layer.in = j.at("in").get<std::size_t>();
  layer.out = j.at("out").get<std::size_t>();
  layer.w = j.at("w").get<std::vector<double>>();
  layer.b = j.at("b").get<std::vector<double>>();
  if (layer.w.size() != layer.in * layer.out || layer.b.size() != layer.out) {
    throw Error("schema", "checkpoint layer shape mismatch");
  }
  return layer;
}

json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (const auto& layer : net.layers) layers.push_back(linear_to_json(layer));
  return {{"layers", std::move(layers)}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  for (const auto& jl : j.at("layers")) net.layers.push_back(linear_from_json(jl));
  return net;
}

json adam_to_json(const AdamState& s) {
  json m = json::array();
  json v = json::array();
  for (const auto& layer : s.m) m.push_back(linear_to_json(layer));
  for (const auto& layer : s.v) v.push_back(linear_to_json(layer));
  return {{"m", std::move(m)}, {"v", std::move(v)}, {"t", s.t},
          {"beta1", s.beta1}, {"beta2", s.beta2}, {"eps", s.eps}};
}

AdamState adam_from_json(const json& j) {
  AdamState s;
  for (const auto& jl : j.at("m")) s.m.push_back(linear_from_json(jl));
  for (const auto& jl : j.at("v")) s.v.push_back(linear_from_json(jl));
  s.t = j.at("t").get<long>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.eps = j.at("eps").get<double>();
  return s;
}

}  // namespace

void save_checkpoint(const AgentNets& nets, const std::filesystem::path& path) {
  json j;
  j["version"] = 1;
  j["policy"] = mlp_to_json(nets.policy);
  j["value"] = mlp_to_json(nets.value);
  j["disc"] = mlp_to_json(nets.disc);
  j["policy_adam"] = adam_to_json(nets.policy_adam);
  j["value_adam"] = adam_to_json(nets.value_adam);
  j["disc_adam"] = adam_to_json(nets.disc_adam);
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write checkpoint: " + path.string());
  out << j.dump() << "\n";
}

AgentNets load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error("schema", std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("version", 0) != 1) {
    throw Error("schema", "unsupported checkpoint version");
  }
  AgentNets nets;
  nets.policy = mlp_from_json(j.at("policy"));
  nets.value = mlp_from_json(j.at("value"));
  nets.disc = mlp_from_json(j.at("disc"));
  nets.policy_adam = adam_from_json(j.at("policy_adam"));
  nets.value_adam = adam_from_json(j.at("value_adam"));
  nets.disc_adam = adam_from_json(j.at("disc_adam"));
  return nets;
}

}  // namespace eard
