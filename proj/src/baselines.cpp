#include "gcasim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gcasim/histogram.hpp"

namespace gcasim {

double degree_jsd(const SpatialNetwork& a, const SpatialNetwork& b) {
  if (a.node_count() == 0 || b.node_count() == 0) {
    throw ValidationError("degree_jsd: empty network");
  }
  std::map<std::size_t, std::size_t> ca;
  std::map<std::size_t, std::size_t> cb;
  for (std::size_t u = 0; u < a.node_count(); ++u) ++ca[a.degree(u)];
  for (std::size_t u = 0; u < b.node_count(); ++u) ++cb[b.degree(u)];

  std::set<std::size_t> bins;
  for (const auto& [d, _] : ca) bins.insert(d);
  for (const auto& [d, _] : cb) bins.insert(d);

  std::vector<double> p;
  std::vector<double> q;
  p.reserve(bins.size());
  q.reserve(bins.size());
  for (std::size_t d : bins) {
    const auto ia = ca.find(d);
    const auto ib = cb.find(d);
    p.push_back(ia == ca.end() ? 0.0
                               : static_cast<double>(ia->second) /
                                     static_cast<double>(a.node_count()));
    q.push_back(ib == cb.end() ? 0.0
                               : static_cast<double>(ib->second) /
                                     static_cast<double>(b.node_count()));
  }
  return jsd(p, q);
}

std::vector<std::array<double, kNetsimileFeatures>> netsimile_features(
    const SpatialNetwork& net) {
  const std::size_t n = net.node_count();
  std::vector<std::array<double, kNetsimileFeatures>> out(n);

  // Local clustering coefficient first; feature 3 averages it over neighbors.
  std::vector<double> clustering(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    const auto& adj = net.adjacency[u];
    const std::size_t k = adj.size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& av = net.adjacency[adj[i]];
      for (std::size_t j = i + 1; j < k; ++j) {
        if (std::binary_search(av.begin(), av.end(), adj[j])) ++links;
      }
    }
    clustering[u] =
        2.0 * static_cast<double>(links) / (static_cast<double>(k) * static_cast<double>(k - 1));
  }

  for (std::size_t u = 0; u < n; ++u) {
    const auto& adj = net.adjacency[u];
    const std::size_t k = adj.size();
    auto& f = out[u];
    f[0] = static_cast<double>(k);
    f[1] = clustering[u];

    if (k == 0) {
      f[2] = 0;
      f[3] = 0;
      f[4] = 0;
      f[5] = 0;
      f[6] = 0;
      continue;
    }
    double deg_sum = 0;
    double clu_sum = 0;
    for (std::uint32_t v : adj) {
      deg_sum += static_cast<double>(net.degree(v));
      clu_sum += clustering[v];
    }
    f[2] = deg_sum / static_cast<double>(k);
    f[3] = clu_sum / static_cast<double>(k);

    // Ego net: u plus its neighbors. Internal edges, edges leaving the ego
    // net, and the set of distinct external endpoints.
    std::set<std::uint32_t> ego(adj.begin(), adj.end());
    ego.insert(static_cast<std::uint32_t>(u));
    std::size_t internal2 = 0;  // double-counted internal edges
    std::size_t outgoing = 0;
    std::set<std::uint32_t> external;
    for (std::uint32_t w : ego) {
      for (std::uint32_t x : net.adjacency[w]) {
        if (ego.count(x) > 0) {
          ++internal2;
        } else {
          ++outgoing;
          external.insert(x);
        }
      }
    }
    f[4] = static_cast<double>(internal2 / 2);
    f[5] = static_cast<double>(outgoing);
    f[6] = static_cast<double>(external.size());
  }
  return out;
}

namespace {

std::array<double, kNetsimileAggregates> aggregate(std::vector<double>& vals) {
  const std::size_t n = vals.size();
  const double dn = static_cast<double>(n);
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= dn;

  std::sort(vals.begin(), vals.end());
  const double median =
      n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);

  double m2 = 0;
  double m3 = 0;
  double m4 = 0;
  for (double v : vals) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  const double sd = std::sqrt(m2);
  const double skew = m2 > 0 ? m3 / (sd * sd * sd) : 0.0;
  const double kurt = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;  // excess kurtosis
  return {mean, median, sd, skew, kurt};
}

}  // namespace

std::array<double, kNetsimileSignature> netsimile_signature(const SpatialNetwork& net) {
  if (net.node_count() == 0) throw ValidationError("netsimile: empty network");
  const auto feats = netsimile_features(net);
  std::array<double, kNetsimileSignature> sig{};
  std::vector<double> column(feats.size());
  for (int f = 0; f < kNetsimileFeatures; ++f) {
    for (std::size_t u = 0; u < feats.size(); ++u) column[u] = feats[u][f];
    const auto agg = aggregate(column);
    for (int a = 0; a < kNetsimileAggregates; ++a) {
      sig[static_cast<std::size_t>(f * kNetsimileAggregates + a)] = agg[a];
    }
  }
  return sig;
}

double netsimile_distance(const SpatialNetwork& a, const SpatialNetwork& b) {
  const auto sa = netsimile_signature(a);
  const auto sb = netsimile_signature(b);
  double total = 0;
  for (int i = 0; i < kNetsimileSignature; ++i) {
    const double num = std::abs(sa[i] - sb[i]);
    const double den = std::abs(sa[i]) + std::abs(sb[i]);
    if (den > 0) total += num / den;
  }
  return total;
}

DistanceMatrix baseline_matrix(const std::vector<const SpatialNetwork*>& nets,
                               std::vector<std::string> names, BaselineMethod method) {
  if (nets.size() != names.size()) throw ConfigError("baseline_matrix: name count mismatch");
  if (nets.size() < 2) throw ValidationError("baseline_matrix: need at least two networks");
  const std::size_t n = nets.size();
  DistanceMatrix m;
  m.names = std::move(names);
  m.values.assign(n * n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  parallel_for(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto [i, j] = pairs[p];
      const double d = method == BaselineMethod::DegreeJsd
                           ? degree_jsd(*nets[i], *nets[j])
                           : netsimile_distance(*nets[i], *nets[j]);
      m.at(i, j) = d;
      m.at(j, i) = d;
    }
  });
  return m;
}

}  // namespace gcasim
