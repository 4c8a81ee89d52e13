#include <cmath>

#include "doctest.h"
#include "gcasim/gates.hpp"
#include "test_support.hpp"

using namespace gcasim;

TEST_CASE("gate op table") {
  const double a = 2.0, b = 3.0;
  CHECK(apply_gate_op(GateOp::Add, a, b) == 5.0);
  CHECK(apply_gate_op(GateOp::Subtract, a, b) == -1.0);
  CHECK(apply_gate_op(GateOp::ReverseSubtract, a, b) == 1.0);
  CHECK(apply_gate_op(GateOp::Max, a, b) == 3.0);
  CHECK(apply_gate_op(GateOp::Min, a, b) == 2.0);
  CHECK(apply_gate_op(GateOp::PassA, a, b) == 2.0);
  CHECK(apply_gate_op(GateOp::PassB, a, b) == 3.0);
  CHECK(apply_gate_op(GateOp::NegateA, a, b) == -2.0);
  CHECK(apply_gate_op(GateOp::NegateB, a, b) == -3.0);
}

TEST_CASE("gate names round trip") {
  for (int i = 0; i < kGateOpCount; ++i) {
    const auto op = static_cast<GateOp>(i);
    CHECK(gate_op_from_name(gate_op_name(op)) == op);
  }
  CHECK_THROWS_AS(gate_op_from_name("nand"), ParseError);
}

TEST_CASE("uniform logits average the op values") {
  // Mean of the nine op outputs at (2, 3): (5-1+1+3+2+2+3-2-3)/9 = 10/9.
  GateNetwork net = init_gate_network(2, {1}, 9);
  const double inputs[2] = {2.0, 3.0};
  CHECK(soft_forward(net, inputs) == doctest::Approx(10.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("wiring is reproducible and respects layer shapes") {
  const GateNetwork a = init_gate_network(4, {8, 4, 1}, 123);
  const GateNetwork b = init_gate_network(4, {8, 4, 1}, 123);
  const GateNetwork c = init_gate_network(4, {8, 4, 1}, 124);
  REQUIRE(a.layers.size() == 3);
  CHECK(a.gate_count() == 13);
  bool same = true, diff = false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const std::uint32_t prev =
        l == 0 ? a.input_arity : static_cast<std::uint32_t>(a.layers[l - 1].size());
    for (std::size_t g = 0; g < a.layers[l].size(); ++g) {
      CHECK(a.layers[l][g].in_a < prev);
      CHECK(a.layers[l][g].in_b < prev);
      same = same && a.layers[l][g].in_a == b.layers[l][g].in_a &&
             a.layers[l][g].in_b == b.layers[l][g].in_b;
      diff = diff || a.layers[l][g].in_a != c.layers[l][g].in_a ||
             a.layers[l][g].in_b != c.layers[l][g].in_b;
    }
  }
  CHECK(same);
  CHECK(diff);

  CHECK_THROWS_AS(init_gate_network(2, {4, 2}, 1), ConfigError);  // last layer must be 1
  CHECK_THROWS_AS(init_gate_network(2, {}, 1), ConfigError);
  CHECK_THROWS_AS(init_gate_network(0, {1}, 1), ConfigError);
}

TEST_CASE("saturated logits make soft equal hard exactly") {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    GateNetwork net = init_gate_network(2, {4, 2, 1}, 50 + rep);
    const HardGateNetwork hard = sample_dominant(net, 99 + rep);
    // Drive the chosen op's logit far above the rest; exp underflow zeroes
    // every other mixture weight.
    std::size_t g = 0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (std::size_t gg = 0; gg < net.layers[l].size(); ++gg) {
        for (int k = 0; k < kGateOpCount; ++k) net.layers[l][gg].logits[k] = -1000.0;
        net.layers[l][gg].logits[static_cast<int>(hard.layers[l][gg].op)] = 1000.0;
        ++g;
      }
    }
    const double inputs[2] = {uniform_real(rng, -3, 3), uniform_real(rng, -3, 3)};
    CHECK(soft_forward(net, inputs) == hard_forward(hard, inputs));
  }
}

TEST_CASE("hardening picks the argmax with lowest-index ties") {
  GateNetwork net = init_gate_network(2, {1}, 3);
  net.layers[0][0].logits = {1, 5, 5, 0, 0, 0, 0, 0, 0};
  CHECK(harden(net).layers[0][0].op == GateOp::Subtract);  // index 1 beats 2
  net.layers[0][0].logits = {0, 0, 0, 0, 0, 0, 0, 0, 2};
  CHECK(harden(net).layers[0][0].op == GateOp::NegateB);
}

TEST_CASE("soften reproduces the hard network and boosts the chosen op") {
  GateNetwork base = init_gate_network(2, {4, 2, 1}, 11);
  const HardGateNetwork hard = sample_dominant(base, 5);
  const GateNetwork soft = soften(hard, 1.0);
  const HardGateNetwork back = harden(soft);
  for (std::size_t l = 0; l < hard.layers.size(); ++l)
    for (std::size_t g = 0; g < hard.layers[l].size(); ++g) {
      CHECK(back.layers[l][g].op == hard.layers[l][g].op);
      CHECK(back.layers[l][g].in_a == hard.layers[l][g].in_a);
      CHECK(back.layers[l][g].in_b == hard.layers[l][g].in_b);
    }
}

TEST_CASE("gate network gradients match finite differences") {
  // Criterion-level check: >= 100 countable logit cases, h = 1e-5,
  // relative error < 1e-4, ties avoided by construction of the inputs.
  Rng rng(1234);
  const double h = 1e-5, tol = 1e-4;
  int counted = 0, failed = 0;
  int guard = 0;
  while (counted < 120 && guard < 2000) {
    ++guard;
    GateNetwork net = init_gate_network(2, {4, 2, 1}, 1000 + static_cast<std::uint64_t>(guard));
    testsup::randomize_logits(net, rng);
    double inputs[2] = {uniform_real(rng, -2, 2), uniform_real(rng, -2, 2)};
    // Keep Max/Min away from their tie line at every gate.
    {
      const GateProbs probs = softmax_probs(net);
      GateActivations acts;
      soft_forward_cached(net, probs, inputs, acts);
      // Tie scan over the flat activation record: a Max/Min kink within the
      // FD step width would corrupt the central difference.
      bool tie = false;
      std::size_t base = net.input_arity;
      std::size_t prev_base = 0;
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (const auto& gate : net.layers[l]) {
          const double va = acts[prev_base + gate.in_a];
          const double vb = acts[prev_base + gate.in_b];
          if (std::abs(va - vb) < 1e-3) tie = true;
        }
        prev_base = base;
        base += net.layers[l].size();
      }
      if (tie) continue;
    }

    const GateProbs probs = softmax_probs(net);
    GateActivations acts;
    soft_forward_cached(net, probs, inputs, acts);
    LogitGrads grads(net.gate_count());
    for (auto& g : grads) g.fill(0.0);
    double input_grads[2] = {0, 0};
    soft_backward(net, probs, acts, 1.0, input_grads, grads);

    // Two random logit coordinates per sampled network.
    for (int pick = 0; pick < 2; ++pick) {
      const std::size_t gi = uniform_index(rng, net.gate_count());
      const int op = static_cast<int>(uniform_index(rng, kGateOpCount));
      double* logit = testsup::logit_at(net, gi, op);
      REQUIRE(logit != nullptr);
      const double saved = *logit;
      auto f = [&](double x) {
        *logit = x;
        const double out = soft_forward(net, inputs);
        *logit = saved;
        return out;
      };
      const auto check = testsup::fd_check(f, saved, grads[gi][op], h, tol);
      if (!check.countable) continue;
      ++counted;
      if (!check.ok) {
        ++failed;
        CAPTURE(check.analytic);
        CAPTURE(check.numeric);
        CHECK(check.ok);
      }
    }

    // And the input adjoints.
    for (int which = 0; which < 2; ++which) {
      const double saved = inputs[which];
      auto f = [&](double x) {
        inputs[which] = x;
        const double out = soft_forward(net, inputs);
        inputs[which] = saved;
        return out;
      };
      const auto check = testsup::fd_check(f, saved, input_grads[which], h, tol);
      if (!check.countable) continue;
      ++counted;
      if (!check.ok) {
        ++failed;
        CHECK(check.ok);
      }
    }
  }
  CHECK(counted >= 100);
  CHECK(failed == 0);
}

TEST_CASE("entropy value and gradient") {
  GateNetwork net = init_gate_network(2, {1}, 1);
  // Uniform logits: entropy = ln 9 per gate.
  CHECK(sum_gate_entropy(softmax_probs(net)) == doctest::Approx(std::log(9.0)).epsilon(1e-12));

  // FD check of the entropy gradient on random logits.
  Rng rng(42);
  const double h = 1e-5;
  for (int rep = 0; rep < 20; ++rep) {
    GateNetwork g = init_gate_network(2, {2, 1}, 10 + rep);
    testsup::randomize_logits(g, rng);
    LogitGrads grads(g.gate_count());
    for (auto& x : grads) x.fill(0.0);
    add_entropy_gradient(softmax_probs(g), 1.0, grads);
    const std::size_t gi = uniform_index(rng, g.gate_count());
    const int op = static_cast<int>(uniform_index(rng, kGateOpCount));
    double* logit = testsup::logit_at(g, gi, op);
    const double saved = *logit;
    auto f = [&](double x) {
      *logit = x;
      const double e = sum_gate_entropy(softmax_probs(g));
      *logit = saved;
      return e;
    };
    const auto check = testsup::fd_check(f, saved, grads[gi][op], h, 1e-4);
    if (check.countable) CHECK(check.ok);
  }
}
