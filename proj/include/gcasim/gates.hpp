#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcasim/common.hpp"

namespace gcasim {

// Binary gate vocabulary, in fixed index order. Hardening ties resolve to
// the lowest index.
enum class GateOp : std::uint8_t {
  Add = 0,
  Subtract,
  ReverseSubtract,
  Max,
  Min,
  PassA,
  PassB,
  NegateA,
  NegateB,
};

inline constexpr int kGateOpCount = 9;

const char* gate_op_name(GateOp op);
GateOp gate_op_from_name(const std::string& name);

double apply_gate_op(GateOp op, double a, double b);

// Values of all nine ops at (a, b).
void gate_op_values(double a, double b, std::array<double, kGateOpCount>& out);

// Partials of each op, with the 0.5/0.5 tie subgradient for Max/Min.
void gate_op_partials(double a, double b, std::array<double, kGateOpCount>& da,
                      std::array<double, kGateOpCount>& db);

struct SoftGate {
  std::array<double, kGateOpCount> logits{};
  std::uint32_t in_a = 0;
  std::uint32_t in_b = 0;
};

struct HardGate {
  GateOp op = GateOp::Add;
  std::uint32_t in_a = 0;
  std::uint32_t in_b = 0;
};

// Feed-forward gate network: layer 0 reads the input vector, later layers
// read the previous layer, the last layer has exactly one gate. Wiring is
// drawn once from wiring_seed at init time and never changes.
struct GateNetwork {
  std::uint32_t input_arity = 2;
  std::vector<std::vector<SoftGate>> layers;
  std::uint64_t wiring_seed = 0;

  std::size_t gate_count() const;
  std::vector<std::uint32_t> layer_sizes() const;
};

struct HardGateNetwork {
  std::uint32_t input_arity = 2;
  std::vector<std::vector<HardGate>> layers;
  std::uint64_t wiring_seed = 0;

  std::size_t gate_count() const;
};

enum class LogitInit { UniformZero, Random };

GateNetwork init_gate_network(std::uint32_t input_arity,
                              const std::vector<std::uint32_t>& layer_sizes,
                              std::uint64_t wiring_seed, LogitInit init = LogitInit::UniformZero);

// Softmax mixing weights (temperature 1) for every gate, layer-major. Probs
// depend only on the logits, so callers evaluating many inputs compute them
// once and reuse.
using GateProbs = std::vector<std::array<double, kGateOpCount>>;
GateProbs softmax_probs(const GateNetwork& net);

// Flat activation record of one evaluation: inputs, then each layer's
// outputs. Sized input_arity + gate_count.
using GateActivations = std::vector<double>;

double soft_forward_cached(const GateNetwork& net, const GateProbs& probs,
                           std::span<const double> inputs, GateActivations& acts);
double soft_forward(const GateNetwork& net, std::span<const double> inputs);

// Flat per-gate logit gradient buffer, layer-major (same order as probs).
using LogitGrads = std::vector<std::array<double, kGateOpCount>>;

// Accumulates d(upstream * output)/dlogits into logit_grads and the input
// adjoints into input_grads (length input_arity).
void soft_backward(const GateNetwork& net, const GateProbs& probs, const GateActivations& acts,
                   double upstream, std::span<double> input_grads, LogitGrads& logit_grads);

HardGateNetwork harden(const GateNetwork& net);

// Replaces every gate's operator with a uniformly random one.
HardGateNetwork sample_dominant(const GateNetwork& net, std::uint64_t seed);

// Soft network whose argmax reproduces `hard`, with the chosen op's logit
// raised by dominant_logit above the rest.
GateNetwork soften(const HardGateNetwork& hard, double dominant_logit);

double hard_forward(const HardGateNetwork& net, std::span<const double> inputs);

// Mean softmax entropy over the network's gates, plus its logit gradient
// scaled by coef and by 1/total_gates (total across whatever collection the
// mean is taken over).
double sum_gate_entropy(const GateProbs& probs);
void add_entropy_gradient(const GateProbs& probs, double coef_over_total,
                          LogitGrads& logit_grads);

}  // namespace gcasim
