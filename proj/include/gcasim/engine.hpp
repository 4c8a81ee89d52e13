#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gcasim/gates.hpp"
#include "gcasim/graph.hpp"

namespace gcasim {

// Denominator guard in the L1 attention normalization.
inline constexpr double kAttentionEps = 1e-12;

struct GateTriple {
  GateNetwork fusion;     // (s_u, s_v)
  GateNetwork attention;  // (s_u, s_v, d, theta)
  GateNetwork update;     // (s_u, m_u)
};

struct HardGateTriple {
  HardGateNetwork fusion;
  HardGateNetwork attention;
  HardGateNetwork update;
};

HardGateTriple harden(const GateTriple& triple);
GateTriple soften(const HardGateTriple& triple, double dominant_logit);

// Default submodule shapes: fusion [4,2,1] on 2 inputs, attention [8,4,1]
// on 4 inputs, update [16,8,4,1] on 2 inputs.
GateTriple default_gate_triple(std::uint64_t seed, LogitInit init = LogitInit::UniformZero);

enum class RuleKind { Laplacian, GateTriple };
enum class RuleMode { Soft, Hard };

struct RuleSpec {
  RuleKind kind = RuleKind::Laplacian;
  RuleMode mode = RuleMode::Hard;
  std::optional<GateTriple> soft;
  std::optional<HardGateTriple> hard;

  // The triple evaluated in hard mode: explicit hard ops if present,
  // otherwise the hardened soft parameters.
  HardGateTriple hard_triple() const;
};

RuleSpec laplacian_rule();
RuleSpec gate_rule(GateTriple triple, RuleMode mode);
RuleSpec hard_gate_rule(HardGateTriple triple);

std::string rule_to_json(const RuleSpec& rule);
RuleSpec rule_from_json(const std::string& text);
void save_rule(const RuleSpec& rule, const std::filesystem::path& path);
RuleSpec load_rule(const std::filesystem::path& path);

// A short stable digest of a rule's JSON form, embedded in outputs.
std::string rule_hash(const RuleSpec& rule);

// One synchronous step of the fixed diffusion rule: each node subtracts the
// mean of its neighbor states; isolated nodes keep their state.
std::vector<double> laplacian_step(const SpatialNetwork& net, const std::vector<double>& states);

// Precomputed softmax tables for evaluating a soft triple many times.
struct SoftRuleContext {
  const GateTriple* triple = nullptr;
  GateProbs fusion_probs;
  GateProbs attention_probs;
  GateProbs update_probs;
};
SoftRuleContext make_soft_context(const GateTriple& triple);

std::vector<double> gca_step_hard(const SpatialNetwork& net, const HardGateTriple& triple,
                                  const std::vector<double>& states);
std::vector<double> gca_step_soft(const SpatialNetwork& net, const SoftRuleContext& ctx,
                                  const std::vector<double>& states);

// Dispatch on rule kind/mode.
std::vector<double> gca_step(const SpatialNetwork& net, const RuleSpec& rule,
                             const std::vector<double>& states);

struct StateTrace {
  // states[t] for t = 0..T; states[0] is the initial state vector.
  std::vector<std::vector<double>> states;
  std::size_t iterations() const { return states.empty() ? 0 : states.size() - 1; }
};

// Runs `iterations` synchronous steps from s0 (node degrees when s0 is not
// given) and records every intermediate state vector.
StateTrace evolve(const SpatialNetwork& net, const RuleSpec& rule, std::size_t iterations,
                  const std::vector<double>* s0 = nullptr);

struct TripleGrads {
  LogitGrads fusion;
  LogitGrads attention;
  LogitGrads update;
};
TripleGrads zero_grads(const GateTriple& triple);

// Reverse sweep through a soft evolve. adjoints[t] holds dL/d states[t] for
// t = 1..iterations (index 0 is ignored); gate logit gradients accumulate
// into grads. Forward activations are recomputed one step at a time from the
// recorded trace.
void evolve_backward(const SpatialNetwork& net, const SoftRuleContext& ctx,
                     const StateTrace& trace, const std::vector<std::vector<double>>& adjoints,
                     TripleGrads& grads);

}  // namespace gcasim
