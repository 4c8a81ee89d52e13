#pragma once

// Shared helpers for the unit and acceptance suites: random graph
// generation, dense reference implementations, and finite differences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gcasim/engine.hpp"
#include "gcasim/graph.hpp"

namespace testsup {

using namespace gcasim;

// Random spatial graph: n in [n_min, n_max], coordinates a few kilometers
// apart, each node pair wired with probability edge_prob.
inline SpatialNetwork random_graph(Rng& rng, std::size_t n_min, std::size_t n_max,
                                   double edge_prob = 0.15) {
  const std::size_t n = n_min + uniform_index(rng, n_max - n_min + 1);
  std::vector<SpatialNode> nodes;
  nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes.push_back({static_cast<std::int64_t>(i), uniform_real(rng, -0.05, 0.05),
                     uniform_real(rng, -0.05, 0.05)});
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (uniform_unit(rng) < edge_prob)
        edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
    }
  }
  return build_network(std::move(nodes), edges);
}

// Dense (I - D^-1 A) s reference; isolated nodes keep their state.
inline std::vector<double> dense_laplacian(const SpatialNetwork& net,
                                           const std::vector<double>& s) {
  const std::size_t n = net.node_count();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t u = 0; u < n; ++u)
    for (std::uint32_t v : net.adjacency[u]) a[u][v] = 1.0;
  std::vector<double> out(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    const double deg = static_cast<double>(net.degree(u));
    if (deg == 0) {
      out[u] = s[u];
      continue;
    }
    double acc = 0;
    for (std::size_t v = 0; v < n; ++v) acc += a[u][v] * s[v];
    out[u] = s[u] - acc / deg;
  }
  return out;
}

// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  const int ka = 1 + *std::max_element(a.begin(), a.end());
  const int kb = 1 + *std::max_element(b.begin(), b.end());
  std::vector<std::vector<double>> table(static_cast<std::size_t>(ka),
                                         std::vector<double>(static_cast<std::size_t>(kb), 0.0));
  for (std::size_t i = 0; i < n; ++i)
    table[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])] += 1.0;

  auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  for (int i = 0; i < ka; ++i) {
    double row = 0;
    for (int j = 0; j < kb; ++j) {
      row += table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      sum_ij += choose2(table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    sum_a += choose2(row);
  }
  for (int j = 0; j < kb; ++j) {
    double col = 0;
    for (int i = 0; i < ka; ++i) col += table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    sum_b += choose2(col);
  }
  const double total = choose2(static_cast<double>(n));
  const double expected = sum_a * sum_b / total;
  const double maximum = 0.5 * (sum_a + sum_b);
  if (maximum == expected) return 1.0;  // both partitions trivial
  return (sum_ij - expected) / (maximum - expected);
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(got), std::abs(want));
  if (scale == 0) return 0.0;
  return std::abs(got - want) / scale;
}

// One finite-difference comparison: true when the analytic value matches the
// central difference within tol, measured relatively when the magnitude is
// meaningful. Comparisons below the FD noise floor are reported as
// "too small" so callers can resample instead of miscounting them.
struct FdCheck {
  bool countable = false;
  bool ok = false;
  double analytic = 0;
  double numeric = 0;
};

inline FdCheck fd_check(const std::function<double(double)>& f, double x, double analytic,
                        double h, double tol) {
  FdCheck c;
  c.analytic = analytic;
  c.numeric = central_diff(f, x, h);
  if (std::abs(c.numeric) < 1e-6 && std::abs(analytic) < 1e-6) {
    c.countable = false;  // below the noise floor either way
    return c;
  }
  c.countable = true;
  c.ok = rel_err(analytic, c.numeric) < tol;
  return c;
}

// Random logits in a range that keeps the softmax well mixed.
inline void randomize_logits(GateNetwork& net, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (auto& layer : net.layers)
    for (auto& gate : layer)
      for (auto& l : gate.logits) l = uniform_real(rng, lo, hi);
}

inline double* logit_at(GateNetwork& net, std::size_t flat_gate, int op) {
  std::size_t g = 0;
  for (auto& layer : net.layers) {
    for (auto& gate : layer) {
      if (g == flat_gate) return &gate.logits[static_cast<std::size_t>(op)];
      ++g;
    }
  }
  return nullptr;
}

}  // namespace testsup
