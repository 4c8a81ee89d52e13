#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gcasim/similarity.hpp"

namespace gcasim {

inline const double kLn2 = std::log(2.0);
inline const double kDefaultSoftTemperature = 0.1 * std::log(2.0);

struct Dendrogram {
  struct Merge {
    std::size_t a = 0;  // cluster ids: leaves 0..n-1, merge i creates id n+i
    std::size_t b = 0;
    double height = 0;
    std::size_t size = 0;
  };
  std::size_t leaves = 0;
  std::vector<Merge> merges;
};

// Agglomerative average-linkage (UPGMA) clustering; among equally close
// pairs the lexicographically smallest (i, j) cluster-id pair merges first.
Dendrogram hierarchical_cluster(const DistanceMatrix& dist);

// Labels for a k-cluster cut, numbered 0..k-1 in order of first appearance.
std::vector<int> cut_k(const Dendrogram& dendro, std::size_t k);

// Classic silhouette over a precomputed distance matrix. Singleton clusters
// contribute 0, as do points with a == b == 0.
double silhouette(const DistanceMatrix& dist, const std::vector<int>& labels);

// Cluster medoids (member minimizing total distance to its cluster; lowest
// index wins ties), indexed by label.
std::vector<std::size_t> medoids_for_labels(const DistanceMatrix& dist,
                                            const std::vector<int>& labels);

// Probabilistic silhouette: assignments p(i,c) are a softmax over
// -d(i, medoid_c)/temperature, cluster distances are p-weighted means, and
// the per-point silhouettes are mixed by p. Approaches the classic score as
// temperature shrinks. Pass medoids to hold them fixed (e.g. in gradients).
double soft_silhouette(const DistanceMatrix& dist, const std::vector<int>& labels,
                       double temperature = kDefaultSoftTemperature,
                       const std::vector<std::size_t>* medoids = nullptr);

// Distance-only Calinski-Harabasz analogue built on medoids; returns +inf
// when the within-cluster term vanishes.
double ch_index(const DistanceMatrix& dist, const std::vector<int>& labels);

// Distance-only Davies-Bouldin analogue built on medoids; returns +inf when
// two medoids coincide (zero distance).
double db_index(const DistanceMatrix& dist, const std::vector<int>& labels);

struct KCandidate {
  std::size_t k = 0;
  double sil = 0;
  double soft_sil = 0;
  double ch = 0;
  double db = 0;
  int rank_sil = 0;
  int rank_db = 0;
  int rank_sum = 0;
};

struct ClusterResult {
  std::size_t k = 0;
  std::vector<int> labels;
  double sil = 0;
  double soft_sil = 0;
  double ch = 0;
  double db = 0;
  bool degenerate = false;  // all pairwise distances are zero
  Dendrogram dendrogram;
  std::vector<KCandidate> table;
};

struct SelectKConfig {
  std::size_t k_min = 2;
  std::size_t k_max = 12;
  double temperature = kDefaultSoftTemperature;
};

// Cuts the dendrogram at every k in [k_min, min(k_max, n-1)] and picks the
// k with the best joint rank of Silhouette (descending) and Davies-Bouldin
// (ascending); rank-sum ties resolve to the smaller k.
ClusterResult select_k(const DistanceMatrix& dist, const SelectKConfig& cfg = {});

std::string cluster_result_to_json(const ClusterResult& result, const DistanceMatrix& dist,
                                   const std::string& config_digest);

}  // namespace gcasim
