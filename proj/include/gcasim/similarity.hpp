#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcasim/engine.hpp"
#include "gcasim/histogram.hpp"

namespace gcasim {

struct PairDistanceConfig {
  std::size_t iterations = 5;  // compared iterations t = 1..iterations
  int bins = 64;
  bool include_t0 = false;  // also compare the initial states
};

// Multi-stage distribution distance: mean JSD between per-iteration soft
// histograms, each pair of histograms sharing the joint min-max range of the
// two compared state vectors at that iteration.
double pair_distance_traces(const StateTrace& a, const StateTrace& b,
                            const PairDistanceConfig& cfg);

double pair_distance(const SpatialNetwork& a, const SpatialNetwork& b, const RuleSpec& rule,
                     const PairDistanceConfig& cfg);

// Accumulates dL/d(state) for both traces given the upstream adjoint of the
// pair distance. adj_a[t] / adj_b[t] align with the trace state vectors.
void pair_distance_backward(const StateTrace& a, const StateTrace& b,
                            const PairDistanceConfig& cfg, double upstream,
                            std::vector<std::vector<double>>& adj_a,
                            std::vector<std::vector<double>>& adj_b);

struct DistanceMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // row-major n x n, symmetric, zero diagonal

  std::size_t size() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * names.size() + j]; }
};

DistanceMatrix distance_matrix_from_traces(const std::vector<StateTrace>& traces,
                                           std::vector<std::string> names,
                                           const PairDistanceConfig& cfg);

DistanceMatrix distance_matrix(const std::vector<const SpatialNetwork*>& nets,
                               std::vector<std::string> names, const RuleSpec& rule,
                               const PairDistanceConfig& cfg);

// Metadata embedded in matrix exports.
struct MatrixMeta {
  std::string method = "gca";
  std::string rule_digest;
  std::string config_digest;
  std::vector<std::string> sources;
};

std::string matrix_to_csv(const DistanceMatrix& m);
std::string matrix_to_json(const DistanceMatrix& m, const MatrixMeta& meta);
DistanceMatrix matrix_from_csv(const std::string& text);
DistanceMatrix matrix_from_json(const std::string& text);
DistanceMatrix load_matrix(const std::filesystem::path& path);

// node_id,t0..tT rows, one per node.
std::string trace_to_csv(const SpatialNetwork& net, const StateTrace& trace);

// Long-form per-iteration quantiles (linear interpolation): t,level,value.
std::string trace_quantiles_csv(const StateTrace& trace, int levels = 21);

}  // namespace gcasim
