#include "gcasim/similarity.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gcasim/io_util.hpp"

namespace gcasim {

namespace {

void joint_range(const std::vector<double>& a, const std::vector<double>& b, double& lo,
                 double& hi) {
  lo = a[0];
  hi = a[0];
  for (double v : a) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : b) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
}

std::vector<std::size_t> compared_iterations(const StateTrace& a, const StateTrace& b,
                                             const PairDistanceConfig& cfg) {
  if (a.iterations() != b.iterations()) {
    throw ConfigError("pair_distance: traces have different iteration counts");
  }
  if (a.iterations() == 0 && !cfg.include_t0) {
    throw ConfigError("pair_distance: no iterations to compare");
  }
  std::vector<std::size_t> ts;
  if (cfg.include_t0) ts.push_back(0);
  for (std::size_t t = 1; t <= a.iterations(); ++t) ts.push_back(t);
  return ts;
}

}  // namespace

double pair_distance_traces(const StateTrace& a, const StateTrace& b,
                            const PairDistanceConfig& cfg) {
  const auto ts = compared_iterations(a, b, cfg);
  double total = 0;
  for (std::size_t t : ts) {
    double lo = 0;
    double hi = 0;
    joint_range(a.states[t], b.states[t], lo, hi);
    const auto p = soft_histogram(a.states[t], lo, hi, cfg.bins);
    const auto q = soft_histogram(b.states[t], lo, hi, cfg.bins);
    total += jsd(p, q);
  }
  return total / static_cast<double>(ts.size());
}

double pair_distance(const SpatialNetwork& a, const SpatialNetwork& b, const RuleSpec& rule,
                     const PairDistanceConfig& cfg) {
  const StateTrace ta = evolve(a, rule, cfg.iterations);
  const StateTrace tb = evolve(b, rule, cfg.iterations);
  return pair_distance_traces(ta, tb, cfg);
}

void pair_distance_backward(const StateTrace& a, const StateTrace& b,
                            const PairDistanceConfig& cfg, double upstream,
                            std::vector<std::vector<double>>& adj_a,
                            std::vector<std::vector<double>>& adj_b) {
  const auto ts = compared_iterations(a, b, cfg);
  if (adj_a.size() != a.states.size() || adj_b.size() != b.states.size()) {
    throw ConfigError("pair_distance_backward: adjoint shape mismatch");
  }
  const double per_t = upstream / static_cast<double>(ts.size());
  std::vector<double> dp;
  std::vector<double> dq;
  for (std::size_t t : ts) {
    const auto& sa = a.states[t];
    const auto& sb = b.states[t];
    double lo = 0;
    double hi = 0;
    joint_range(sa, sb, lo, hi);
    const auto p = soft_histogram(sa, lo, hi, cfg.bins);
    const auto q = soft_histogram(sb, lo, hi, cfg.bins);
    dp.assign(p.size(), 0.0);
    dq.assign(q.size(), 0.0);
    jsd_backward(p, q, per_t, dp, dq);
    double dlo = 0;
    double dhi = 0;
    soft_histogram_backward(sa, lo, hi, cfg.bins, dp, adj_a[t], dlo, dhi);
    soft_histogram_backward(sb, lo, hi, cfg.bins, dq, adj_b[t], dlo, dhi);
    if (dlo != 0 || dhi != 0) {
      // The range endpoints are the extreme states of the union; route their
      // adjoints onto the first attaining element.
      const auto route = [&](double grad, bool is_lo) {
        if (grad == 0) return;
        const auto find_in = [&](const std::vector<double>& s) -> std::ptrdiff_t {
          const double target = is_lo ? lo : hi;
          for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == target) return static_cast<std::ptrdiff_t>(i);
          }
          return -1;
        };
        if (const auto ia = find_in(sa); ia >= 0) {
          adj_a[t][static_cast<std::size_t>(ia)] += grad;
          return;
        }
        if (const auto ib = find_in(sb); ib >= 0) {
          adj_b[t][static_cast<std::size_t>(ib)] += grad;
        }
      };
      route(dlo, true);
      route(dhi, false);
    }
  }
}

DistanceMatrix distance_matrix_from_traces(const std::vector<StateTrace>& traces,
                                           std::vector<std::string> names,
                                           const PairDistanceConfig& cfg) {
  if (traces.size() != names.size()) throw ConfigError("distance_matrix: name count mismatch");
  if (traces.size() < 2) throw ValidationError("distance_matrix: need at least two networks");
  const std::size_t n = traces.size();
  DistanceMatrix m;
  m.names = std::move(names);
  m.values.assign(n * n, 0.0);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  parallel_for(pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto [i, j] = pairs[p];
      const double d = pair_distance_traces(traces[i], traces[j], cfg);
      m.at(i, j) = d;
      m.at(j, i) = d;
    }
  });
  return m;
}

DistanceMatrix distance_matrix(const std::vector<const SpatialNetwork*>& nets,
                               std::vector<std::string> names, const RuleSpec& rule,
                               const PairDistanceConfig& cfg) {
  std::vector<StateTrace> traces(nets.size());
  parallel_for(nets.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      traces[i] = evolve(*nets[i], rule, cfg.iterations);
    }
  });
  return distance_matrix_from_traces(traces, std::move(names), cfg);
}

std::string matrix_to_csv(const DistanceMatrix& m) {
  std::string out = "name";
  for (const auto& n : m.names) {
    out += ',';
    out += n;
  }
  out += '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += m.names[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      out += ',';
      out += fmt_double(m.at(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string matrix_to_json(const DistanceMatrix& m, const MatrixMeta& meta) {
  nlohmann::json j;
  j["format"] = "gca-dist/1";
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["method"] = meta.method;
  if (!meta.rule_digest.empty()) j["rule_hash"] = meta.rule_digest;
  if (!meta.config_digest.empty()) j["config_hash"] = meta.config_digest;
  if (!meta.sources.empty()) j["sources"] = meta.sources;
  j["names"] = m.names;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < m.size(); ++k) row.push_back(m.at(i, k));
    rows.push_back(std::move(row));
  }
  j["matrix"] = std::move(rows);
  return j.dump(2) + "\n";
}

DistanceMatrix matrix_from_csv(const std::string& text) {
  DistanceMatrix m;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++line_no;
    auto fields = split_csv_line(line);
    if (line_no == 1) {
      if (fields.size() < 3) throw ParseError("matrix csv: expected header with names");
      m.names.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != m.names.size() + 1) {
      throw ParseError("matrix csv: wrong field count at line " + std::to_string(line_no));
    }
    std::vector<double> row;
    row.reserve(m.names.size());
    for (std::size_t i = 1; i < fields.size(); ++i) {
      row.push_back(parse_double_field(fields[i], "distance", line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != m.names.size()) throw ParseError("matrix csv: row/name count mismatch");
  m.values.assign(m.names.size() * m.names.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

DistanceMatrix matrix_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("matrix json: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != "gca-dist/1") {
    throw ParseError("matrix json: missing or unsupported format marker");
  }
  DistanceMatrix m;
  m.names = j.at("names").get<std::vector<std::string>>();
  const auto& rows = j.at("matrix");
  if (rows.size() != m.names.size()) throw ParseError("matrix json: row count mismatch");
  m.values.assign(m.names.size() * m.names.size(), 0.0);
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != m.names.size()) throw ParseError("matrix json: column count mismatch");
    for (std::size_t k = 0; k < m.names.size(); ++k) m.at(i, k) = row[k].get<double>();
  }
  return m;
}

DistanceMatrix load_matrix(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".json") return matrix_from_json(text);
  return matrix_from_csv(text);
}

std::string trace_to_csv(const SpatialNetwork& net, const StateTrace& trace) {
  std::string out = "node_id";
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    out += ",t" + std::to_string(t);
  }
  out += '\n';
  for (std::size_t u = 0; u < net.node_count(); ++u) {
    out += std::to_string(net.nodes[u].id);
    for (const auto& s : trace.states) {
      out += ',';
      out += fmt_double(s[u]);
    }
    out += '\n';
  }
  return out;
}

std::string trace_quantiles_csv(const StateTrace& trace, int levels) {
  if (levels < 2) throw ConfigError("trace_quantiles_csv: need at least two levels");
  std::string out = "t,level,value\n";
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    std::vector<double> sorted = trace.states[t];
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    for (int li = 0; li < levels; ++li) {
      const double level = static_cast<double>(li) / static_cast<double>(levels - 1);
      const double idx = level * static_cast<double>(n - 1);
      const auto lo_i = static_cast<std::size_t>(std::floor(idx));
      const auto hi_i = std::min(lo_i + 1, n - 1);
      const double frac = idx - std::floor(idx);
      const double v = sorted[lo_i] * (1.0 - frac) + sorted[hi_i] * frac;
      out += std::to_string(t);
      out += ',';
      out += fmt_double(level);
      out += ',';
      out += fmt_double(v);
      out += '\n';
    }
  }
  return out;
}

}  // namespace gcasim
