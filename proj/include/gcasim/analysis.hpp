#pragma once

#include <optional>

#include "gcasim/similarity.hpp"

namespace gcasim {

struct ConsistencyConfig {
  double window_m = 20000.0;
  double tile_m = 1000.0;
  std::size_t min_nodes = 10;
  PairDistanceConfig dist;
};

struct ConsistencyReport {
  std::size_t tile_count = 0;
  double score = 0;  // mean over tile pairs of 1 - D/ln2
  DistanceMatrix tile_matrix;
  std::vector<std::pair<int, int>> tile_cells;  // (ix, iy) per tile
};

// Self-similarity of a network: tiles the window around the centroid,
// evolves every tile under the rule, and averages 1 - D/ln2 over all tile
// pairs. Needs at least two retained tiles.
ConsistencyReport internal_consistency(const SpatialNetwork& net, const RuleSpec& rule,
                                       const ConsistencyConfig& cfg, Warnings* warnings = nullptr);

std::string consistency_to_json(const ConsistencyReport& report, const std::string& rule_digest,
                                const std::string& config_digest);

// Spearman rank correlation with average ranks for ties; empty when either
// side has zero rank variance.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

struct ExternalVariable {
  std::string name;
  std::vector<std::int64_t> node_ids;
  std::vector<double> values;
};

// CSV with header node_id,value; the variable takes the file stem as name.
ExternalVariable load_external_variable(const std::filesystem::path& path);

struct CorrelationRow {
  std::string variable;
  std::size_t t = 0;
  std::optional<double> rho;
  std::size_t n = 0;  // matched nodes
};

struct CorrelationConfig {
  std::size_t iterations = 10;
  double min_coverage = 0.5;  // matched fraction of network nodes required
};

// Correlates each iteration's state vector against external node variables,
// joined by node id. Variables matching fewer than three nodes or less than
// min_coverage of the network are skipped with a warning.
std::vector<CorrelationRow> iterate_correlations(const SpatialNetwork& net, const RuleSpec& rule,
                                                 const std::vector<ExternalVariable>& vars,
                                                 const CorrelationConfig& cfg,
                                                 Warnings* warnings = nullptr);

std::string correlations_to_csv(const std::vector<CorrelationRow>& rows);

}  // namespace gcasim
