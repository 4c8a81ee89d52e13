#include "gcasim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace gcasim {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

SpatialNode node_at(std::int64_t id, double x_m, double y_m) {
  // Equirectangular placement near the equator.
  return {id, (y_m / kEarthRadiusM) * kDeg, (x_m / kEarthRadiusM) * kDeg};
}

using EdgeList = std::vector<std::pair<std::int64_t, std::int64_t>>;

SpatialNetwork grid_network(std::size_t target, Rng& rng) {
  const auto side = static_cast<std::size_t>(
      std::max(2.0, std::round(std::sqrt(static_cast<double>(target)))));
  const double spacing = 100.0;
  const double jitter = 0.2 * spacing;

  std::vector<SpatialNode> nodes;
  nodes.reserve(side * side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const double x = static_cast<double>(j) * spacing + uniform_real(rng, -jitter, jitter);
      const double y = static_cast<double>(i) * spacing + uniform_real(rng, -jitter, jitter);
      nodes.push_back(node_at(static_cast<std::int64_t>(i * side + j), x, y));
    }
  }
  EdgeList edges;
  const double dropout = 0.03;
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const auto id = static_cast<std::int64_t>(i * side + j);
      if (j + 1 < side && uniform_unit(rng) >= dropout) edges.emplace_back(id, id + 1);
      if (i + 1 < side && uniform_unit(rng) >= dropout)
        edges.emplace_back(id, id + static_cast<std::int64_t>(side));
    }
  }
  return build_network(std::move(nodes), edges);
}

SpatialNetwork rgg_network(std::size_t target, Rng& rng) {
  const std::size_t n = std::max<std::size_t>(target, 2);
  const double radius = 100.0;
  // Side length giving mean degree ~5: n * pi * r^2 / L^2 = 5.
  const double box = radius * std::sqrt(static_cast<double>(n) * std::numbers::pi / 5.0);

  std::vector<double> xs(n), ys(n);
  std::vector<SpatialNode> nodes;
  nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = uniform_real(rng, 0.0, box);
    ys[i] = uniform_real(rng, 0.0, box);
    nodes.push_back(node_at(static_cast<std::int64_t>(i), xs[i], ys[i]));
  }
  EdgeList edges;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = xs[i] - xs[j];
      const double dy = ys[i] - ys[j];
      if (dx * dx + dy * dy <= r2)
        edges.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j));
    }
  }
  return build_network(std::move(nodes), edges);
}

SpatialNetwork tree_network(std::size_t target, Rng& rng) {
  struct Pend {
    std::int64_t id;
    double x, y;
    double heading;  // radians
  };
  std::vector<SpatialNode> nodes;
  EdgeList edges;
  std::vector<Pend> frontier;

  nodes.push_back(node_at(0, 0.0, 0.0));
  // Four trunks off the root.
  for (int k = 0; k < 4; ++k) {
    if (nodes.size() >= target) break;
    const double heading = k * (std::numbers::pi / 2.0) + uniform_real(rng, -0.2, 0.2);
    const double len = uniform_real(rng, 80.0, 120.0);
    const auto id = static_cast<std::int64_t>(nodes.size());
    const double x = len * std::cos(heading);
    const double y = len * std::sin(heading);
    nodes.push_back(node_at(id, x, y));
    edges.emplace_back(0, id);
    frontier.push_back({id, x, y, heading});
  }
  // Breadth-first growth with 1-2 children per node (mean 1.5); the leaf
  // fraction then tracks the frontier tail, which keeps the local structure
  // stable across network sizes.
  std::size_t head = 0;
  while (head < frontier.size() && nodes.size() < target) {
    const Pend parent = frontier[head++];
    const std::size_t children = 1 + uniform_index(rng, 2);
    for (std::size_t c = 0; c < children && nodes.size() < target; ++c) {
      const double spread =
          (static_cast<double>(c) - static_cast<double>(children - 1) / 2.0) * 0.9;
      const double heading = parent.heading + spread + uniform_real(rng, -0.15, 0.15);
      const double len = uniform_real(rng, 80.0, 120.0);
      const auto id = static_cast<std::int64_t>(nodes.size());
      const double x = parent.x + len * std::cos(heading);
      const double y = parent.y + len * std::sin(heading);
      nodes.push_back(node_at(id, x, y));
      edges.emplace_back(parent.id, id);
      frontier.push_back({id, x, y, heading});
    }
  }
  // A stalled frontier (all leaves drew zero children) restarts from the
  // last node so the target is still reached.
  while (nodes.size() < target) {
    const Pend parent = frontier.empty()
                            ? Pend{0, 0.0, 0.0, 0.0}
                            : frontier.back();
    const double heading = parent.heading + uniform_real(rng, -0.5, 0.5);
    const double len = uniform_real(rng, 80.0, 120.0);
    const auto id = static_cast<std::int64_t>(nodes.size());
    const double x = parent.x + len * std::cos(heading);
    const double y = parent.y + len * std::sin(heading);
    nodes.push_back(node_at(id, x, y));
    edges.emplace_back(parent.id, id);
    frontier.push_back({id, x, y, heading});
  }
  return build_network(std::move(nodes), edges);
}

}  // namespace

const char* synth_family_name(SynthFamily family) {
  switch (family) {
    case SynthFamily::Grid: return "grid";
    case SynthFamily::Rgg: return "rgg";
    case SynthFamily::Tree: return "tree";
  }
  return "grid";
}

SynthFamily synth_family_from_name(const std::string& name) {
  if (name == "grid") return SynthFamily::Grid;
  if (name == "rgg") return SynthFamily::Rgg;
  if (name == "tree") return SynthFamily::Tree;
  throw ConfigError("unknown synthetic family '" + name + "' (grid, rgg, tree)");
}

SpatialNetwork synth_network(SynthFamily family, std::size_t target_nodes, std::uint64_t seed) {
  if (target_nodes < 2) throw ConfigError("synth: target_nodes must be at least 2");
  Rng rng(seed);
  switch (family) {
    case SynthFamily::Grid: return grid_network(target_nodes, rng);
    case SynthFamily::Rgg: return rgg_network(target_nodes, rng);
    case SynthFamily::Tree: return tree_network(target_nodes, rng);
  }
  throw ConfigError("synth: bad family");
}

SynthCorpus synth_family_corpus(std::size_t per_family, std::size_t min_nodes,
                                std::size_t max_nodes, std::uint64_t seed) {
  if (per_family == 0) throw ConfigError("synth: per_family must be positive");
  if (min_nodes < 2 || max_nodes < min_nodes) throw ConfigError("synth: bad size range");
  SynthCorpus corpus;
  const SynthFamily families[] = {SynthFamily::Grid, SynthFamily::Rgg, SynthFamily::Tree};
  for (int f = 0; f < 3; ++f) {
    for (std::size_t i = 0; i < per_family; ++i) {
      const std::size_t span = max_nodes - min_nodes;
      const std::size_t target =
          per_family == 1 ? min_nodes + span / 2
                          : min_nodes + (span * i) / (per_family - 1);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s_%02zu", synth_family_name(families[f]), i);
      corpus.names.emplace_back(buf);
      corpus.nets.push_back(synth_network(families[f], target,
                                          derive_seed(seed, static_cast<std::uint64_t>(f) * 1000 + i)));
      corpus.family_labels.push_back(f);
    }
  }
  return corpus;
}

}  // namespace gcasim
