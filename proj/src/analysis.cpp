#include "gcasim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gcasim/clustering.hpp"
#include "gcasim/io_util.hpp"
#include "json.hpp"

namespace gcasim {

ConsistencyReport internal_consistency(const SpatialNetwork& net, const RuleSpec& rule,
                                       const ConsistencyConfig& cfg, Warnings* warnings) {
  const TileSet tiles = tile_split(net, cfg.window_m, cfg.tile_m, cfg.min_nodes, warnings);
  if (tiles.tiles.size() < 2)
    throw ValidationError("internal_consistency: need at least two tiles, got " +
                          std::to_string(tiles.tiles.size()));

  ConsistencyReport report;
  report.tile_count = tiles.tiles.size();
  std::vector<const SpatialNetwork*> nets;
  std::vector<std::string> names;
  for (const Tile& tile : tiles.tiles) {
    nets.push_back(&tile.net);
    names.push_back("tile_" + std::to_string(tile.ix) + "_" + std::to_string(tile.iy));
    report.tile_cells.emplace_back(tile.ix, tile.iy);
  }
  report.tile_matrix = distance_matrix(nets, std::move(names), rule, cfg.dist);

  const std::size_t k = report.tile_count;
  double sum = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) sum += 1.0 - report.tile_matrix.at(i, j) / kLn2;
  report.score = 2.0 * sum / (static_cast<double>(k) * static_cast<double>(k - 1));
  return report;
}

std::string consistency_to_json(const ConsistencyReport& report, const std::string& rule_digest,
                                const std::string& config_digest) {
  nlohmann::json j;
  j["format"] = "gca-consistency/1";
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["rule_hash"] = rule_digest;
  j["config_hash"] = config_digest;
  j["tile_count"] = report.tile_count;
  j["score"] = report.score;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [ix, iy] : report.tile_cells) cells.push_back({ix, iy});
  j["tiles"] = std::move(cells);
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t n = report.tile_matrix.size();
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j2 = 0; j2 < n; ++j2) row.push_back(report.tile_matrix.at(i, j2));
    rows.push_back(std::move(row));
  }
  j["tile_matrix"] = std::move(rows);
  return j.dump(2) + "\n";
}

namespace {

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mean_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("spearman: need at least three samples");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

ExternalVariable load_external_variable(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  {
    const auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "node_id" || header[1] != "value")
      throw ParseError(path.string() + ": expected header node_id,value");
  }
  ExternalVariable var;
  var.name = path.stem().string();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
    var.node_ids.push_back(parse_int_field(fields[0], path.string().c_str(), line_no));
    var.values.push_back(parse_double_field(fields[1], path.string().c_str(), line_no));
  }
  if (var.node_ids.empty()) throw ValidationError(path.string() + ": no rows");
  return var;
}

std::vector<CorrelationRow> iterate_correlations(const SpatialNetwork& net, const RuleSpec& rule,
                                                 const std::vector<ExternalVariable>& vars,
                                                 const CorrelationConfig& cfg,
                                                 Warnings* warnings) {
  if (vars.empty()) throw ConfigError("correlate: no variables given");
  const StateTrace trace = evolve(net, rule, cfg.iterations);
  const std::size_t n = net.node_count();

  std::vector<CorrelationRow> rows;
  for (const ExternalVariable& var : vars) {
    // Join on node id; later duplicates in the variable win.
    std::vector<double> value_of(n, 0.0);
    std::vector<bool> present(n, false);
    for (std::size_t i = 0; i < var.node_ids.size(); ++i) {
      const std::ptrdiff_t idx = net.index_of(var.node_ids[i]);
      if (idx < 0) continue;
      value_of[static_cast<std::size_t>(idx)] = var.values[i];
      present[static_cast<std::size_t>(idx)] = true;
    }
    std::vector<std::size_t> matched;
    for (std::size_t i = 0; i < n; ++i)
      if (present[i]) matched.push_back(i);

    const double coverage = static_cast<double>(matched.size()) / static_cast<double>(n);
    if (matched.size() < 3 || coverage < cfg.min_coverage) {
      warn(warnings, "variable '" + var.name + "' matches " + std::to_string(matched.size()) +
                         " of " + std::to_string(n) + " nodes; skipped");
      continue;
    }

    std::vector<double> xs(matched.size()), ys(matched.size());
    for (std::size_t m = 0; m < matched.size(); ++m) ys[m] = value_of[matched[m]];
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
      for (std::size_t m = 0; m < matched.size(); ++m) xs[m] = trace.states[t][matched[m]];
      CorrelationRow row;
      row.variable = var.name;
      row.t = t;
      row.rho = spearman(xs, ys);
      row.n = matched.size();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string correlations_to_csv(const std::vector<CorrelationRow>& rows) {
  std::string out = "variable,t,rho,n\n";
  for (const CorrelationRow& row : rows) {
    out += row.variable;
    out += ',';
    out += std::to_string(row.t);
    out += ',';
    out += row.rho.has_value() ? fmt_double(*row.rho) : std::string("nan");
    out += ',';
    out += std::to_string(row.n);
    out += '\n';
  }
  return out;
}

}  // namespace gcasim
