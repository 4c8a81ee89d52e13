#include "gcasim/clustering.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

namespace gcasim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_labels(const DistanceMatrix& dist, const std::vector<int>& labels) {
  if (labels.size() != dist.size()) throw ConfigError("labels must match matrix size");
  for (int l : labels) {
    if (l < 0) throw ValidationError("negative cluster label");
  }
}

std::size_t cluster_count(const std::vector<int>& labels) {
  int mx = -1;
  for (int l : labels) mx = std::max(mx, l);
  return static_cast<std::size_t>(mx + 1);
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "+inf" : "-inf";
}

}  // namespace

Dendrogram hierarchical_cluster(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 2) throw ValidationError("hierarchical_cluster: need at least two items");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(dist.at(i, j))) throw NumericError("non-finite distance entry");
      if (dist.at(i, j) < 0) throw ValidationError("negative distance entry");
    }
  }

  struct Active {
    std::size_t id;
    std::size_t size;
  };
  // work[slot_a][slot_b] holds the current inter-cluster distance; slots are
  // recycled leaf positions.
  std::vector<std::vector<double>> work(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) work[i][j] = dist.at(i, j);
  }
  std::vector<Active> slots(n);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) slots[i] = {i, 1};

  Dendrogram out;
  out.leaves = n;
  out.merges.reserve(n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    // Active slots ordered by cluster id so that equal distances resolve to
    // the lowest (id_a, id_b) pair.
    order.clear();
    for (std::size_t s = 0; s < n; ++s) {
      if (alive[s]) order.push_back(s);
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return slots[a].id < slots[b].id; });

    double best = kInf;
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t j = i + 1; j < order.size(); ++j) {
        const double d = work[order[i]][order[j]];
        if (d < best) {
          best = d;
          best_a = order[i];
          best_b = order[j];
        }
      }
    }

    const std::size_t new_size = slots[best_a].size + slots[best_b].size;
    const double wa = static_cast<double>(slots[best_a].size) / static_cast<double>(new_size);
    const double wb = static_cast<double>(slots[best_b].size) / static_cast<double>(new_size);
    for (std::size_t s = 0; s < n; ++s) {
      if (!alive[s] || s == best_a || s == best_b) continue;
      const double d = wa * work[best_a][s] + wb * work[best_b][s];
      work[best_a][s] = d;
      work[s][best_a] = d;
    }
    out.merges.push_back({slots[best_a].id, slots[best_b].id, best, new_size});
    slots[best_a] = {n + step, new_size};
    alive[best_b] = false;
  }
  return out;
}

std::vector<int> cut_k(const Dendrogram& dendro, std::size_t k) {
  const std::size_t n = dendro.leaves;
  if (k < 1 || k > n) throw ConfigError("cut_k: k out of range");

  // Union-find over leaves; cluster ids map to one representative leaf.
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<std::size_t> leaf_of(n + dendro.merges.size());
  for (std::size_t i = 0; i < n; ++i) leaf_of[i] = i;
  for (std::size_t m = 0; m < n - k; ++m) {
    const auto& mg = dendro.merges[m];
    const std::size_t ra = find(leaf_of[mg.a]);
    const std::size_t rb = find(leaf_of[mg.b]);
    parent[rb] = ra;
    leaf_of[n + m] = ra;
  }

  std::vector<int> labels(n, -1);
  std::vector<int> root_label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    labels[i] = root_label[r];
  }
  return labels;
}

double silhouette(const DistanceMatrix& dist, const std::vector<int>& labels) {
  check_labels(dist, labels);
  const std::size_t n = labels.size();
  const std::size_t k = cluster_count(labels);
  if (k < 2) throw ValidationError("silhouette: need at least two clusters");
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];

  double total = 0;
  std::vector<double> sums(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ci = static_cast<std::size_t>(labels[i]);
    if (counts[ci] <= 1) continue;  // singleton contributes 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(labels[j])] += dist.at(i, j);
    }
    const double a = sums[ci] / static_cast<double>(counts[ci] - 1);
    double b = kInf;
    for (std::size_t c = 0; c < k; ++c) {
      if (c == ci || counts[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::vector<std::size_t> medoids_for_labels(const DistanceMatrix& dist,
                                            const std::vector<int>& labels) {
  check_labels(dist, labels);
  const std::size_t n = labels.size();
  const std::size_t k = cluster_count(labels);
  std::vector<std::size_t> medoids(k, n);
  std::vector<double> best(k, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ci = static_cast<std::size_t>(labels[i]);
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] == labels[i]) sum += dist.at(i, j);
    }
    if (sum < best[ci]) {
      best[ci] = sum;
      medoids[ci] = i;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (medoids[c] == n) throw ValidationError("empty cluster " + std::to_string(c));
  }
  return medoids;
}

double soft_silhouette(const DistanceMatrix& dist, const std::vector<int>& labels,
                       double temperature, const std::vector<std::size_t>* medoids) {
  check_labels(dist, labels);
  if (temperature <= 0) throw ConfigError("soft_silhouette: temperature must be positive");
  const std::size_t n = labels.size();
  const std::size_t k = cluster_count(labels);
  if (k < 2) throw ValidationError("soft_silhouette: need at least two clusters");
  const std::vector<std::size_t> med =
      medoids != nullptr ? *medoids : medoids_for_labels(dist, labels);
  if (med.size() != k) throw ConfigError("soft_silhouette: medoid count mismatch");

  // p[i][c]: softmax over clusters of -d(i, medoid_c)/temperature.
  std::vector<std::vector<double>> p(n, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -kInf;
    for (std::size_t c = 0; c < k; ++c) {
      p[i][c] = -dist.at(i, med[c]) / temperature;
      mx = std::max(mx, p[i][c]);
    }
    double sum = 0;
    for (std::size_t c = 0; c < k; ++c) {
      p[i][c] = std::exp(p[i][c] - mx);
      sum += p[i][c];
    }
    for (std::size_t c = 0; c < k; ++c) p[i][c] /= sum;
  }

  std::vector<double> wsum(k, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < k; ++c) wsum[c] += p[j][c];
  }

  double total = 0;
  std::vector<double> dtil(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double num = 0;
      for (std::size_t j = 0; j < n; ++j) num += p[j][c] * dist.at(i, j);
      const double denom = wsum[c] - p[i][c];
      dtil[c] = denom > 0 ? num / denom : 0.0;
    }
    double mix = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double a = dtil[c];
      double b = kInf;
      for (std::size_t c2 = 0; c2 < k; ++c2) {
        if (c2 != c) b = std::min(b, dtil[c2]);
      }
      const double denom = std::max(a, b);
      const double s = denom > 0 ? (b - a) / denom : 0.0;
      mix += p[i][c] * s;
    }
    total += mix;
  }
  return total / static_cast<double>(n);
}

double ch_index(const DistanceMatrix& dist, const std::vector<int>& labels) {
  check_labels(dist, labels);
  const std::size_t n = labels.size();
  const std::size_t k = cluster_count(labels);
  if (k < 2 || k >= n) throw ValidationError("ch_index: need 2 <= k < n");
  const auto med = medoids_for_labels(dist, labels);

  // Global medoid: item minimizing total distance to everything.
  std::size_t global = 0;
  double best = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += dist.at(i, j);
    if (sum < best) {
      best = sum;
      global = i;
    }
  }

  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];

  double within = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = dist.at(i, med[static_cast<std::size_t>(labels[i])]);
    within += d * d;
  }
  double between = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double d = dist.at(med[c], global);
    between += static_cast<double>(counts[c]) * d * d;
  }
  if (within == 0) return kInf;
  return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

double db_index(const DistanceMatrix& dist, const std::vector<int>& labels) {
  check_labels(dist, labels);
  const std::size_t k = cluster_count(labels);
  if (k < 2) throw ValidationError("db_index: need at least two clusters");
  const auto med = medoids_for_labels(dist, labels);
  const std::size_t n = labels.size();

  std::vector<double> scatter(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    scatter[c] += dist.at(i, med[c]);
    ++counts[c];
  }
  for (std::size_t c = 0; c < k; ++c) scatter[c] /= static_cast<double>(counts[c]);

  double total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double worst = 0;
    for (std::size_t c2 = 0; c2 < k; ++c2) {
      if (c2 == c) continue;
      const double sep = dist.at(med[c], med[c2]);
      if (sep == 0) return kInf;
      worst = std::max(worst, (scatter[c] + scatter[c2]) / sep);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

ClusterResult select_k(const DistanceMatrix& dist, const SelectKConfig& cfg) {
  const std::size_t n = dist.size();
  if (n < 3) throw ValidationError("select_k: need at least three items");
  if (cfg.k_min < 2) throw ConfigError("select_k: k_min must be at least 2");
  const std::size_t k_hi = std::min(cfg.k_max, n - 1);
  if (k_hi < cfg.k_min) throw ValidationError("select_k: empty k range");

  ClusterResult result;
  result.dendrogram = hierarchical_cluster(dist);

  double max_off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) max_off = std::max(max_off, dist.at(i, j));
  }
  result.degenerate = max_off == 0;

  for (std::size_t k = cfg.k_min; k <= k_hi; ++k) {
    const auto labels = cut_k(result.dendrogram, k);
    KCandidate cand;
    cand.k = k;
    cand.sil = silhouette(dist, labels);
    cand.soft_sil = soft_silhouette(dist, labels, cfg.temperature);
    cand.ch = ch_index(dist, labels);
    cand.db = db_index(dist, labels);
    result.table.push_back(cand);
  }

  for (auto& cand : result.table) {
    cand.rank_sil = 1;
    cand.rank_db = 1;
    for (const auto& other : result.table) {
      if (other.sil > cand.sil) ++cand.rank_sil;
      if (other.db < cand.db) ++cand.rank_db;
    }
    cand.rank_sum = cand.rank_sil + cand.rank_db;
  }

  const KCandidate* chosen = &result.table.front();
  for (const auto& cand : result.table) {
    if (cand.rank_sum < chosen->rank_sum) chosen = &cand;
  }

  result.k = chosen->k;
  result.labels = cut_k(result.dendrogram, result.k);
  result.sil = chosen->sil;
  result.soft_sil = chosen->soft_sil;
  result.ch = chosen->ch;
  result.db = chosen->db;
  return result;
}

std::string cluster_result_to_json(const ClusterResult& result, const DistanceMatrix& dist,
                                   const std::string& config_digest) {
  nlohmann::json j;
  j["format"] = "gca-cluster/1";
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  if (!config_digest.empty()) j["config_hash"] = config_digest;
  j["k"] = result.k;
  j["names"] = dist.names;
  j["labels"] = result.labels;
  j["silhouette"] = json_number(result.sil);
  j["soft_silhouette"] = json_number(result.soft_sil);
  j["calinski_harabasz"] = json_number(result.ch);
  j["davies_bouldin"] = json_number(result.db);
  j["degenerate"] = result.degenerate;
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : result.dendrogram.merges) {
    merges.push_back({m.a, m.b, m.height, m.size});
  }
  j["merges"] = std::move(merges);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& c : result.table) {
    table.push_back({{"k", c.k},
                     {"silhouette", json_number(c.sil)},
                     {"soft_silhouette", json_number(c.soft_sil)},
                     {"calinski_harabasz", json_number(c.ch)},
                     {"davies_bouldin", json_number(c.db)},
                     {"rank_silhouette", c.rank_sil},
                     {"rank_davies_bouldin", c.rank_db},
                     {"rank_sum", c.rank_sum}});
  }
  j["k_table"] = std::move(table);
  return j.dump(2) + "\n";
}

}  // namespace gcasim
