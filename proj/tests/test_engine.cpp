#include <cmath>

#include "doctest.h"
#include "gcasim/engine.hpp"
#include "test_support.hpp"

using namespace gcasim;

namespace {

HardGateNetwork single_gate(std::uint32_t arity, GateOp op, std::uint32_t a, std::uint32_t b) {
  HardGateNetwork net;
  net.input_arity = arity;
  net.layers = {{HardGate{op, a, b}}};
  return net;
}

// Fixed diffusion expressed as gates: message = neighbor state, weight =
// own (positive) state so normalization hands every neighbor 1/k, update =
// state minus aggregate.
HardGateTriple diffusion_triple() {
  HardGateTriple t;
  t.fusion = single_gate(2, GateOp::PassB, 0, 1);
  t.attention = single_gate(4, GateOp::PassA, 0, 1);
  t.update = single_gate(2, GateOp::Subtract, 0, 1);
  return t;
}

}  // namespace

TEST_CASE("path graph diffusion step") {
  const SpatialNetwork net =
      build_network({{0, 0.0, 0.0}, {1, 0.0, 0.01}, {2, 0.0, 0.02}}, {{0, 1}, {1, 2}});
  const std::vector<double> s = init_states(net);
  REQUIRE(s == std::vector<double>{1, 2, 1});
  CHECK(laplacian_step(net, s) == std::vector<double>{-1, 1, -1});
}

TEST_CASE("diffusion matches the dense reference on random graphs") {
  Rng rng(2024);
  for (int rep = 0; rep < 25; ++rep) {
    const SpatialNetwork net = testsup::random_graph(rng, 5, 50);
    std::vector<double> s(net.node_count());
    for (auto& x : s) x = uniform_real(rng, -5, 5);
    const std::vector<double> got = laplacian_step(net, s);
    const std::vector<double> want = testsup::dense_laplacian(net, s);
    REQUIRE(got.size() == want.size());
    for (std::size_t u = 0; u < got.size(); ++u) CHECK(std::abs(got[u] - want[u]) <= 1e-9);
  }
}

TEST_CASE("gate triple reproduces diffusion on positive states") {
  Rng rng(7);
  const HardGateTriple triple = diffusion_triple();
  for (int rep = 0; rep < 10; ++rep) {
    const SpatialNetwork net = testsup::random_graph(rng, 5, 40);
    std::vector<double> s(net.node_count());
    for (auto& x : s) x = uniform_real(rng, 0.5, 5.0);  // weights need a sign
    const std::vector<double> got = gca_step_hard(net, triple, s);
    const std::vector<double> want = laplacian_step(net, s);
    for (std::size_t u = 0; u < got.size(); ++u) CHECK(std::abs(got[u] - want[u]) <= 1e-9);
  }
}

TEST_CASE("evolve records every state and starts from degrees") {
  Rng rng(3);
  const SpatialNetwork net = testsup::random_graph(rng, 8, 20);
  const StateTrace trace = evolve(net, laplacian_rule(), 5);
  REQUIRE(trace.states.size() == 6);
  CHECK(trace.states[0] == init_states(net));
  CHECK(trace.states[1] == laplacian_step(net, trace.states[0]));
}

TEST_CASE("soft evolution with saturated logits equals hard evolution") {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const SpatialNetwork net = testsup::random_graph(rng, 10, 25);
    GateTriple soft = default_gate_triple(100 + rep);
    const HardGateTriple hard{sample_dominant(soft.fusion, 5 + rep),
                              sample_dominant(soft.attention, 6 + rep),
                              sample_dominant(soft.update, 7 + rep)};
    auto saturate = [](GateNetwork& net_s, const HardGateNetwork& net_h) {
      for (std::size_t l = 0; l < net_s.layers.size(); ++l)
        for (std::size_t g = 0; g < net_s.layers[l].size(); ++g) {
          for (int k = 0; k < kGateOpCount; ++k) net_s.layers[l][g].logits[k] = -1000.0;
          net_s.layers[l][g].logits[static_cast<int>(net_h.layers[l][g].op)] = 1000.0;
        }
    };
    saturate(soft.fusion, hard.fusion);
    saturate(soft.attention, hard.attention);
    saturate(soft.update, hard.update);

    const StateTrace a = evolve(net, gate_rule(soft, RuleMode::Soft), 4);
    const StateTrace b = evolve(net, hard_gate_rule(hard), 4);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t t = 0; t < a.states.size(); ++t) CHECK(a.states[t] == b.states[t]);
  }
}

TEST_CASE("evolution gradients match finite differences") {
  Rng rng(555);
  const double h = 1e-5, tol = 1e-4;
  int counted = 0, failed = 0, attempts = 0;
  while (counted < 60 && attempts < 400) {
    ++attempts;
    const SpatialNetwork net = testsup::random_graph(rng, 6, 14, 0.3);
    GateTriple triple = default_gate_triple(3000 + static_cast<std::uint64_t>(attempts));
    testsup::randomize_logits(triple.fusion, rng);
    testsup::randomize_logits(triple.attention, rng);
    testsup::randomize_logits(triple.update, rng);

    const std::size_t steps = 3;
    std::vector<double> weights(net.node_count());
    for (auto& w : weights) w = uniform_real(rng, -1, 1);

    auto objective = [&](const GateTriple& t) {
      const StateTrace trace = evolve(net, gate_rule(t, RuleMode::Soft), steps);
      double acc = 0;
      for (std::size_t u = 0; u < weights.size(); ++u) acc += weights[u] * trace.states[steps][u];
      return acc;
    };

    // Analytic gradient: adjoint of the weighted sum of final states.
    const SoftRuleContext ctx = make_soft_context(triple);
    const StateTrace trace = evolve(net, gate_rule(triple, RuleMode::Soft), steps);
    std::vector<std::vector<double>> adjoints(steps + 1,
                                              std::vector<double>(net.node_count(), 0.0));
    adjoints[steps] = weights;
    TripleGrads grads = zero_grads(triple);
    evolve_backward(net, ctx, trace, adjoints, grads);

    // Check one random logit in each submodule.
    struct Pick {
      GateNetwork* net_p;
      LogitGrads* grads_p;
    };
    Pick picks[3] = {{&triple.fusion, &grads.fusion},
                     {&triple.attention, &grads.attention},
                     {&triple.update, &grads.update}};
    for (const Pick& pick : picks) {
      const std::size_t gi = uniform_index(rng, pick.net_p->gate_count());
      const int op = static_cast<int>(uniform_index(rng, kGateOpCount));
      double* logit = testsup::logit_at(*pick.net_p, gi, op);
      const double saved = *logit;
      const double analytic = (*pick.grads_p)[gi][op];
      auto f = [&](double x) {
        *logit = x;
        const double out = objective(triple);
        *logit = saved;
        return out;
      };
      auto check = testsup::fd_check(f, saved, analytic, h, tol);
      if (check.countable && !check.ok) {
        // A Max/Min or range kink inside the step width spoils the central
        // difference; shrinking h shrinks the kink window, a real gradient
        // bug keeps failing.
        check = testsup::fd_check(f, saved, analytic, h * 0.1, 1e-3);
      }
      if (!check.countable) continue;
      ++counted;
      if (!check.ok) {
        ++failed;
        CAPTURE(check.analytic);
        CAPTURE(check.numeric);
        CHECK(check.ok);
      }
    }
  }
  CHECK(counted >= 60);
  CHECK(failed == 0);
}

TEST_CASE("rule serialization round trips") {
  const RuleSpec lap = laplacian_rule();
  const RuleSpec lap2 = rule_from_json(rule_to_json(lap));
  CHECK(lap2.kind == RuleKind::Laplacian);
  CHECK(rule_hash(lap) == rule_hash(lap2));

  GateTriple triple = default_gate_triple(77, LogitInit::Random);
  const RuleSpec soft = gate_rule(triple, RuleMode::Soft);
  const RuleSpec soft2 = rule_from_json(rule_to_json(soft));
  REQUIRE(soft2.soft.has_value());
  CHECK(soft2.mode == RuleMode::Soft);
  CHECK(rule_hash(soft) == rule_hash(soft2));
  for (std::size_t l = 0; l < triple.update.layers.size(); ++l)
    for (std::size_t g = 0; g < triple.update.layers[l].size(); ++g)
      for (int k = 0; k < kGateOpCount; ++k)
        CHECK(soft2.soft->update.layers[l][g].logits[k] == triple.update.layers[l][g].logits[k]);

  const RuleSpec hard = hard_gate_rule(harden(triple));
  const RuleSpec hard2 = rule_from_json(rule_to_json(hard));
  REQUIRE(hard2.hard.has_value());
  CHECK(rule_hash(hard) == rule_hash(hard2));
}

TEST_CASE("numeric blowups raise numeric errors") {
  const SpatialNetwork net = build_network({{0, 0.0, 0.0}, {1, 0.0, 0.01}}, {{0, 1}});
  const std::vector<double> s0 = {1e308, -1e308};
  CHECK_THROWS_AS(evolve(net, laplacian_rule(), 1, &s0), NumericError);
}
