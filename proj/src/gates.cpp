#include "gcasim/gates.hpp"

#include <algorithm>
#include <cmath>

namespace gcasim {

namespace {
constexpr const char* kOpNames[kGateOpCount] = {
    "add",    "subtract", "reverse_subtract", "max",      "min",
    "pass_a", "pass_b",   "negate_a",         "negate_b",
};
}

const char* gate_op_name(GateOp op) { return kOpNames[static_cast<int>(op)]; }

GateOp gate_op_from_name(const std::string& name) {
  for (int i = 0; i < kGateOpCount; ++i) {
    if (name == kOpNames[i]) return static_cast<GateOp>(i);
  }
  throw ParseError("unknown gate op '" + name + "'");
}

double apply_gate_op(GateOp op, double a, double b) {
  switch (op) {
    case GateOp::Add: return a + b;
    case GateOp::Subtract: return a - b;
    case GateOp::ReverseSubtract: return b - a;
    case GateOp::Max: return std::max(a, b);
    case GateOp::Min: return std::min(a, b);
    case GateOp::PassA: return a;
    case GateOp::PassB: return b;
    case GateOp::NegateA: return -a;
    case GateOp::NegateB: return -b;
  }
  return 0;
}

void gate_op_values(double a, double b, std::array<double, kGateOpCount>& out) {
  out[0] = a + b;
  out[1] = a - b;
  out[2] = b - a;
  out[3] = std::max(a, b);
  out[4] = std::min(a, b);
  out[5] = a;
  out[6] = b;
  out[7] = -a;
  out[8] = -b;
}

void gate_op_partials(double a, double b, std::array<double, kGateOpCount>& da,
                      std::array<double, kGateOpCount>& db) {
  const double max_a = a > b ? 1.0 : (a < b ? 0.0 : 0.5);
  da[0] = 1;
  da[1] = 1;
  da[2] = -1;
  da[3] = max_a;
  da[4] = 1.0 - max_a;
  da[5] = 1;
  da[6] = 0;
  da[7] = -1;
  da[8] = 0;
  db[0] = 1;
  db[1] = -1;
  db[2] = 1;
  db[3] = 1.0 - max_a;
  db[4] = max_a;
  db[5] = 0;
  db[6] = 1;
  db[7] = 0;
  db[8] = -1;
}

std::size_t GateNetwork::gate_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

std::vector<std::uint32_t> GateNetwork::layer_sizes() const {
  std::vector<std::uint32_t> sizes;
  sizes.reserve(layers.size());
  for (const auto& layer : layers) sizes.push_back(static_cast<std::uint32_t>(layer.size()));
  return sizes;
}

std::size_t HardGateNetwork::gate_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

GateNetwork init_gate_network(std::uint32_t input_arity,
                              const std::vector<std::uint32_t>& layer_sizes,
                              std::uint64_t wiring_seed, LogitInit init) {
  if (input_arity == 0) throw ConfigError("gate network needs at least one input");
  if (layer_sizes.empty()) throw ConfigError("gate network needs at least one layer");
  if (layer_sizes.back() != 1) throw ConfigError("last gate layer must have exactly one gate");
  for (std::uint32_t s : layer_sizes) {
    if (s == 0) throw ConfigError("gate layer sizes must be positive");
  }

  GateNetwork net;
  net.input_arity = input_arity;
  net.wiring_seed = wiring_seed;
  Rng rng(wiring_seed);
  std::uint32_t prev = input_arity;
  for (std::uint32_t size : layer_sizes) {
    std::vector<SoftGate> layer(size);
    for (auto& gate : layer) {
      gate.in_a = static_cast<std::uint32_t>(uniform_index(rng, prev));
      gate.in_b = static_cast<std::uint32_t>(uniform_index(rng, prev));
    }
    net.layers.push_back(std::move(layer));
    prev = size;
  }
  if (init == LogitInit::Random) {
    for (auto& layer : net.layers) {
      for (auto& gate : layer) {
        for (auto& logit : gate.logits) logit = uniform_real(rng, -0.5, 0.5);
      }
    }
  }
  return net;
}

GateProbs softmax_probs(const GateNetwork& net) {
  GateProbs probs;
  probs.reserve(net.gate_count());
  for (const auto& layer : net.layers) {
    for (const auto& gate : layer) {
      std::array<double, kGateOpCount> p{};
      double mx = gate.logits[0];
      for (double l : gate.logits) mx = std::max(mx, l);
      double sum = 0;
      for (int k = 0; k < kGateOpCount; ++k) {
        p[k] = std::exp(gate.logits[k] - mx);
        sum += p[k];
      }
      for (auto& v : p) v /= sum;
      probs.push_back(p);
    }
  }
  return probs;
}

double soft_forward_cached(const GateNetwork& net, const GateProbs& probs,
                           std::span<const double> inputs, GateActivations& acts) {
  if (inputs.size() != net.input_arity) throw ConfigError("gate network input arity mismatch");
  acts.resize(net.input_arity + net.gate_count());
  std::copy(inputs.begin(), inputs.end(), acts.begin());

  std::size_t prev_off = 0;
  std::size_t prev_size = net.input_arity;
  std::size_t out_off = net.input_arity;
  std::size_t gate_idx = 0;
  std::array<double, kGateOpCount> vals{};
  for (const auto& layer : net.layers) {
    for (std::size_t g = 0; g < layer.size(); ++g, ++gate_idx) {
      const SoftGate& gate = layer[g];
      const double a = acts[prev_off + gate.in_a];
      const double b = acts[prev_off + gate.in_b];
      gate_op_values(a, b, vals);
      const auto& p = probs[gate_idx];
      double out = 0;
      for (int k = 0; k < kGateOpCount; ++k) out += p[k] * vals[k];
      if (!std::isfinite(out)) {
        throw NumericError("non-finite gate output at gate " + std::to_string(gate_idx));
      }
      acts[out_off + g] = out;
    }
    prev_off = out_off;
    prev_size = layer.size();
    out_off += layer.size();
  }
  (void)prev_size;
  return acts.back();
}

double soft_forward(const GateNetwork& net, std::span<const double> inputs) {
  const GateProbs probs = softmax_probs(net);
  GateActivations acts;
  return soft_forward_cached(net, probs, inputs, acts);
}

void soft_backward(const GateNetwork& net, const GateProbs& probs, const GateActivations& acts,
                   double upstream, std::span<double> input_grads, LogitGrads& logit_grads) {
  if (input_grads.size() != net.input_arity) throw ConfigError("input gradient buffer mismatch");
  if (logit_grads.size() != probs.size()) throw ConfigError("logit gradient buffer mismatch");

  // Adjoints for every activation slot, seeded at the single output.
  thread_local std::vector<double> adj;
  adj.assign(acts.size(), 0.0);
  adj.back() = upstream;

  // Layer offsets into the flat activation record.
  std::size_t total = net.input_arity;
  std::vector<std::size_t> offsets(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    offsets[l] = total;
    total += net.layers[l].size();
  }

  std::array<double, kGateOpCount> vals{};
  std::array<double, kGateOpCount> da{};
  std::array<double, kGateOpCount> db{};
  std::size_t gate_idx = probs.size();
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const auto& layer = net.layers[l];
    const std::size_t prev_off = l == 0 ? 0 : offsets[l - 1];
    for (std::size_t g = layer.size(); g-- > 0;) {
      --gate_idx;
      const SoftGate& gate = layer[g];
      const double up = adj[offsets[l] + g];
      if (up == 0) continue;
      const double a = acts[prev_off + gate.in_a];
      const double b = acts[prev_off + gate.in_b];
      const double out = acts[offsets[l] + g];
      gate_op_values(a, b, vals);
      gate_op_partials(a, b, da, db);
      const auto& p = probs[gate_idx];
      auto& lg = logit_grads[gate_idx];
      double ga = 0;
      double gb = 0;
      for (int k = 0; k < kGateOpCount; ++k) {
        lg[k] += up * p[k] * (vals[k] - out);
        ga += p[k] * da[k];
        gb += p[k] * db[k];
      }
      adj[prev_off + gate.in_a] += up * ga;
      adj[prev_off + gate.in_b] += up * gb;
    }
  }
  for (std::size_t i = 0; i < net.input_arity; ++i) input_grads[i] += adj[i];
}

HardGateNetwork harden(const GateNetwork& net) {
  HardGateNetwork hard;
  hard.input_arity = net.input_arity;
  hard.wiring_seed = net.wiring_seed;
  hard.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    std::vector<HardGate> hl;
    hl.reserve(layer.size());
    for (const auto& gate : layer) {
      int best = 0;
      for (int k = 1; k < kGateOpCount; ++k) {
        if (gate.logits[k] > gate.logits[best]) best = k;
      }
      hl.push_back({static_cast<GateOp>(best), gate.in_a, gate.in_b});
    }
    hard.layers.push_back(std::move(hl));
  }
  return hard;
}

HardGateNetwork sample_dominant(const GateNetwork& net, std::uint64_t seed) {
  HardGateNetwork hard;
  hard.input_arity = net.input_arity;
  hard.wiring_seed = net.wiring_seed;
  Rng rng(seed);
  hard.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    std::vector<HardGate> hl;
    hl.reserve(layer.size());
    for (const auto& gate : layer) {
      const auto op = static_cast<GateOp>(uniform_index(rng, kGateOpCount));
      hl.push_back({op, gate.in_a, gate.in_b});
    }
    hard.layers.push_back(std::move(hl));
  }
  return hard;
}

GateNetwork soften(const HardGateNetwork& hard, double dominant_logit) {
  GateNetwork net;
  net.input_arity = hard.input_arity;
  net.wiring_seed = hard.wiring_seed;
  net.layers.reserve(hard.layers.size());
  for (const auto& layer : hard.layers) {
    std::vector<SoftGate> sl;
    sl.reserve(layer.size());
    for (const auto& gate : layer) {
      SoftGate sg;
      sg.in_a = gate.in_a;
      sg.in_b = gate.in_b;
      sg.logits[static_cast<int>(gate.op)] = dominant_logit;
      sl.push_back(sg);
    }
    net.layers.push_back(std::move(sl));
  }
  return net;
}

double hard_forward(const HardGateNetwork& net, std::span<const double> inputs) {
  if (inputs.size() != net.input_arity) throw ConfigError("gate network input arity mismatch");
  thread_local std::vector<double> prev;
  thread_local std::vector<double> cur;
  prev.assign(inputs.begin(), inputs.end());
  for (const auto& layer : net.layers) {
    cur.resize(layer.size());
    for (std::size_t g = 0; g < layer.size(); ++g) {
      const HardGate& gate = layer[g];
      cur[g] = apply_gate_op(gate.op, prev[gate.in_a], prev[gate.in_b]);
    }
    std::swap(prev, cur);
  }
  const double out = prev[0];
  if (!std::isfinite(out)) throw NumericError("non-finite hard gate network output");
  return out;
}

double sum_gate_entropy(const GateProbs& probs) {
  double total = 0;
  for (const auto& p : probs) {
    double h = 0;
    for (double v : p) {
      if (v > 0) h -= v * std::log(v);
    }
    total += h;
  }
  return total;
}

void add_entropy_gradient(const GateProbs& probs, double coef_over_total,
                          LogitGrads& logit_grads) {
  for (std::size_t g = 0; g < probs.size(); ++g) {
    const auto& p = probs[g];
    double h = 0;
    for (double v : p) {
      if (v > 0) h -= v * std::log(v);
    }
    for (int k = 0; k < kGateOpCount; ++k) {
      if (p[k] > 0) {
        logit_grads[g][k] += coef_over_total * (-p[k] * (std::log(p[k]) + h));
      }
    }
  }
}

}  // namespace gcasim
