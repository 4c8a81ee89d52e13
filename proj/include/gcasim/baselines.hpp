#pragma once

#include <array>
#include <vector>

#include "gcasim/similarity.hpp"

namespace gcasim {

// JSD between the exact degree distributions of two graphs, binned over the
// union of degrees observed in either.
double degree_jsd(const SpatialNetwork& a, const SpatialNetwork& b);

inline constexpr int kNetsimileFeatures = 7;
inline constexpr int kNetsimileAggregates = 5;
inline constexpr int kNetsimileSignature = kNetsimileFeatures * kNetsimileAggregates;

// Per-node structural features, in order: degree, clustering coefficient,
// mean neighbor degree, mean neighbor clustering, ego-net internal edge
// count, ego-net outgoing edge count, distinct external ego-net neighbors.
std::vector<std::array<double, kNetsimileFeatures>> netsimile_features(const SpatialNetwork& net);

// Feature-major aggregation (mean, median, population std, skewness, excess
// kurtosis) of the per-node features.
std::array<double, kNetsimileSignature> netsimile_signature(const SpatialNetwork& net);

// Canberra distance between signatures; 0/0 terms count as 0.
double netsimile_distance(const SpatialNetwork& a, const SpatialNetwork& b);

enum class BaselineMethod { DegreeJsd, Netsimile };

DistanceMatrix baseline_matrix(const std::vector<const SpatialNetwork*>& nets,
                               std::vector<std::string> names, BaselineMethod method);

}  // namespace gcasim
