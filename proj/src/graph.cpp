#include "gcasim/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "gcasim/io_util.hpp"

namespace gcasim {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Keep the smaller index as root so the surviving node id is the
    // smaller one (nodes are sorted by id before contraction).
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

}  // namespace

std::size_t SpatialNetwork::edge_count() const {
  std::size_t half = 0;
  for (const auto& adj : adjacency) half += adj.size();
  return half / 2;
}

std::ptrdiff_t SpatialNetwork::index_of(std::int64_t id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const SpatialNode& n, std::int64_t v) { return n.id < v; });
  if (it == nodes.end() || it->id != id) return -1;
  return it - nodes.begin();
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlam = (lon2 - lon1) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  const double c = 2.0 * std::asin(std::min(1.0, std::sqrt(a)));
  return kEarthRadiusM * c;
}

double azimuth_deg(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dlam = (lon2 - lon1) * kDegToRad;
  const double y = std::sin(dlam) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlam);
  double deg = std::atan2(y, x) / kDegToRad;
  if (deg < 0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

SpatialNetwork build_network(std::vector<SpatialNode> nodes,
                             const std::vector<std::pair<std::int64_t, std::int64_t>>& edges,
                             Warnings* warnings) {
  for (const auto& n : nodes) {
    if (!std::isfinite(n.lat) || !std::isfinite(n.lon)) {
      throw ValidationError("non-finite coordinate on node " + std::to_string(n.id));
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const SpatialNode& a, const SpatialNode& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].id == nodes[i - 1].id) {
      throw ValidationError("duplicate node id " + std::to_string(nodes[i].id));
    }
  }

  auto index_of = [&nodes](std::int64_t id) -> std::size_t {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const SpatialNode& n, std::int64_t v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) {
      throw ValidationError("edge references missing node id " + std::to_string(id));
    }
    return static_cast<std::size_t>(it - nodes.begin());
  };

  std::size_t self_loops = 0;
  UnionFind uf(nodes.size());
  std::vector<std::pair<std::size_t, std::size_t>> idx_edges;
  idx_edges.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    const std::size_t u = index_of(a);
    const std::size_t v = index_of(b);
    if (u == v) {
      ++self_loops;
      continue;
    }
    if (nodes[u].lat == nodes[v].lat && nodes[u].lon == nodes[v].lon) {
      uf.unite(u, v);
      warn(warnings, "contracting zero-length edge " + std::to_string(nodes[u].id) + "-" +
                         std::to_string(nodes[v].id));
      continue;
    }
    idx_edges.emplace_back(u, v);
  }
  if (self_loops > 0) {
    warn(warnings, "dropped " + std::to_string(self_loops) + " self-loop(s)");
  }

  // Apply contractions: keep class roots, remap edge endpoints.
  std::vector<std::size_t> remap(nodes.size());
  std::vector<SpatialNode> kept;
  kept.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (uf.find(i) == i) {
      remap[i] = kept.size();
      kept.push_back(nodes[i]);
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> unique_edges;
  std::size_t parallel = 0;
  for (auto [u, v] : idx_edges) {
    std::size_t ru = remap[uf.find(u)];
    std::size_t rv = remap[uf.find(v)];
    if (ru == rv) continue;  // became a loop after contraction
    if (rv < ru) std::swap(ru, rv);
    if (!unique_edges.emplace(ru, rv).second) ++parallel;
  }
  if (parallel > 0) {
    warn(warnings, "merged " + std::to_string(parallel) + " parallel edge(s)");
  }

  SpatialNetwork net;
  net.nodes = std::move(kept);
  net.adjacency.assign(net.nodes.size(), {});
  for (const auto& [u, v] : unique_edges) {
    net.adjacency[u].push_back(static_cast<std::uint32_t>(v));
    net.adjacency[v].push_back(static_cast<std::uint32_t>(u));
  }
  for (auto& adj : net.adjacency) std::sort(adj.begin(), adj.end());
  compute_edge_features(net, warnings);
  return net;
}

void compute_edge_features(SpatialNetwork& net, Warnings* warnings) {
  const std::size_t n = net.node_count();
  net.features.assign(n, {});
  for (std::size_t u = 0; u < n; ++u) {
    const auto& adj = net.adjacency[u];
    const std::size_t k = adj.size();
    if (k == 0) continue;
    auto& feats = net.features[u];
    feats.assign(k, HalfEdgeFeature{});
    const SpatialNode& nu = net.nodes[u];

    std::vector<double> len(k);
    double max_len = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const SpatialNode& nv = net.nodes[adj[j]];
      len[j] = haversine_m(nu.lat, nu.lon, nv.lat, nv.lon);
      max_len = std::max(max_len, len[j]);
    }
    if (max_len == 0) {
      warn(warnings, "all incident edges of node " + std::to_string(nu.id) +
                         " have zero length; d set to 1");
      for (std::size_t j = 0; j < k; ++j) feats[j].d = 1.0;
    } else {
      double min_pos = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (len[j] > 0) min_pos = std::min(min_pos, len[j] / max_len);
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (len[j] == 0) {
          warn(warnings, "zero-length edge at node " + std::to_string(nu.id) +
                             "; d set to smallest positive normalized length");
          feats[j].d = min_pos;
        } else {
          feats[j].d = len[j] / max_len;
        }
      }
    }

    if (k == 1) {
      feats[0].theta = 1.0;
      continue;
    }
    std::vector<double> az(k);
    for (std::size_t j = 0; j < k; ++j) {
      const SpatialNode& nv = net.nodes[adj[j]];
      az[j] = azimuth_deg(nu.lat, nu.lon, nv.lat, nv.lon);
    }
    std::vector<std::size_t> order(k);
    for (std::size_t j = 0; j < k; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (az[a] != az[b]) return az[a] < az[b];
      return adj[a] < adj[b];
    });
    // Gap between circularly consecutive azimuths; each half-edge owns the
    // gap on each of its two sides.
    std::vector<double> gap(k);
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t q = (p + 1) % k;
      double g = az[order[q]] - az[order[p]];
      if (p + 1 == k) g += 360.0;
      gap[p] = g;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t prev = (p + k - 1) % k;
      feats[order[p]].theta = (gap[prev] + gap[p]) / 360.0;
    }
  }
}

std::vector<double> init_states(const SpatialNetwork& net) {
  std::vector<double> s(net.node_count());
  for (std::size_t u = 0; u < s.size(); ++u) s[u] = static_cast<double>(net.degree(u));
  return s;
}

namespace {

SpatialNetwork load_edge_list_csv(const std::filesystem::path& dir, Warnings* warnings) {
  const auto nodes_path = dir / "nodes.csv";
  const auto edges_path = dir / "edges.csv";
  const std::string nodes_text = read_text_file(nodes_path);
  const std::string edges_text = read_text_file(edges_path);

  auto for_each_line = [](const std::string& text, auto&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      ++line_no;
      std::string line = text.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) fn(line, line_no);
      pos = end + 1;
    }
  };

  std::vector<SpatialNode> nodes;
  bool header_seen = false;
  for_each_line(nodes_text, [&](const std::string& line, std::size_t line_no) {
    auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() < 3 || fields[0] != "id" || fields[1] != "lat" || fields[2] != "lon") {
        throw ParseError("nodes.csv line 1: expected header id,lat,lon");
      }
      return;
    }
    if (fields.size() != 3) {
      throw ParseError("nodes.csv line " + std::to_string(line_no) + ": expected 3 fields");
    }
    SpatialNode n;
    n.id = parse_int_field(fields[0], "node id", line_no);
    n.lat = parse_double_field(fields[1], "lat", line_no);
    n.lon = parse_double_field(fields[2], "lon", line_no);
    nodes.push_back(n);
  });
  if (!header_seen) throw ParseError("nodes.csv is empty");

  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  header_seen = false;
  for_each_line(edges_text, [&](const std::string& line, std::size_t line_no) {
    auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() < 2 || fields[0] != "u" || fields[1] != "v") {
        throw ParseError("edges.csv line 1: expected header u,v");
      }
      return;
    }
    if (fields.size() != 2) {
      throw ParseError("edges.csv line " + std::to_string(line_no) + ": expected 2 fields");
    }
    edges.emplace_back(parse_int_field(fields[0], "edge endpoint", line_no),
                       parse_int_field(fields[1], "edge endpoint", line_no));
  });
  if (!header_seen) throw ParseError("edges.csv is empty");
  return build_network(std::move(nodes), edges, warnings);
}

// Minimal GraphML reader: <key> declarations, <node> elements carrying lat
// and lon either as XML attributes or as <data> children, <edge> elements
// with source/target. Anything fancier is out of scope.
struct XmlTag {
  std::string name;
  std::map<std::string, std::string> attrs;
  bool self_closing = false;
  std::size_t body_begin = 0;
  std::size_t tag_end = 0;
};

bool next_tag(const std::string& text, std::size_t from, XmlTag& out) {
  while (true) {
    std::size_t lt = text.find('<', from);
    if (lt == std::string::npos) return false;
    if (text.compare(lt, 4, "<!--") == 0) {
      std::size_t close = text.find("-->", lt);
      if (close == std::string::npos) return false;
      from = close + 3;
      continue;
    }
    if (lt + 1 < text.size() && (text[lt + 1] == '?' || text[lt + 1] == '/')) {
      from = lt + 1;
      continue;
    }
    std::size_t gt = text.find('>', lt);
    if (gt == std::string::npos) return false;
    std::string inside = text.substr(lt + 1, gt - lt - 1);
    out.self_closing = !inside.empty() && inside.back() == '/';
    if (out.self_closing) inside.pop_back();
    std::size_t name_end = inside.find_first_of(" \t\r\n");
    out.name = inside.substr(0, name_end);
    out.attrs.clear();
    if (name_end != std::string::npos) {
      std::size_t p = name_end;
      while (p < inside.size()) {
        while (p < inside.size() && std::isspace(static_cast<unsigned char>(inside[p]))) ++p;
        std::size_t eq = inside.find('=', p);
        if (eq == std::string::npos) break;
        std::string key = inside.substr(p, eq - p);
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        std::size_t q1 = inside.find('"', eq);
        if (q1 == std::string::npos) break;
        std::size_t q2 = inside.find('"', q1 + 1);
        if (q2 == std::string::npos) break;
        out.attrs[key] = inside.substr(q1 + 1, q2 - q1 - 1);
        p = q2 + 1;
      }
    }
    out.body_begin = gt + 1;
    out.tag_end = gt + 1;
    return true;
  }
}

std::int64_t graphml_node_id(const std::string& raw, std::size_t fallback_ordinal) {
  if (raw.empty()) return static_cast<std::int64_t>(fallback_ordinal);
  std::size_t digits = raw.find_first_of("0123456789");
  std::int64_t v = 0;
  if (digits != std::string::npos) {
    const char* begin = raw.data() + (raw[0] == '-' ? 0 : digits);
    auto res = std::from_chars(begin, raw.data() + raw.size(), v);
    if (res.ec == std::errc() && res.ptr == raw.data() + raw.size()) return v;
  }
  throw ParseError("graphml node id '" + raw + "' has no usable integer form");
}

SpatialNetwork load_graphml(const std::filesystem::path& path, Warnings* warnings) {
  const std::string text = read_text_file(path);
  std::map<std::string, std::string> key_names;  // key id -> attr.name
  std::vector<SpatialNode> nodes;
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  std::map<std::string, std::int64_t> raw_ids;

  XmlTag tag;
  std::size_t pos = 0;
  while (next_tag(text, pos, tag)) {
    pos = tag.tag_end;
    if (tag.name == "key") {
      auto id = tag.attrs.find("id");
      auto nm = tag.attrs.find("attr.name");
      if (id != tag.attrs.end() && nm != tag.attrs.end()) key_names[id->second] = nm->second;
    } else if (tag.name == "node") {
      auto idat = tag.attrs.find("id");
      if (idat == tag.attrs.end()) throw ParseError("graphml node without id");
      SpatialNode n;
      n.id = graphml_node_id(idat->second, nodes.size());
      raw_ids[idat->second] = n.id;
      bool has_lat = false;
      bool has_lon = false;
      if (auto it = tag.attrs.find("lat"); it != tag.attrs.end()) {
        n.lat = parse_double_field(it->second, "lat", 0);
        has_lat = true;
      }
      if (auto it = tag.attrs.find("lon"); it != tag.attrs.end()) {
        n.lon = parse_double_field(it->second, "lon", 0);
        has_lon = true;
      }
      if (!tag.self_closing) {
        std::size_t body_end = text.find("</node>", tag.body_begin);
        if (body_end == std::string::npos) throw ParseError("unterminated graphml node element");
        std::size_t dpos = tag.body_begin;
        XmlTag data;
        while (next_tag(text, dpos, data) && data.tag_end <= body_end) {
          dpos = data.tag_end;
          if (data.name != "data") continue;
          auto kit = data.attrs.find("key");
          if (kit == data.attrs.end()) continue;
          std::string attr = kit->second;
          if (auto nit = key_names.find(attr); nit != key_names.end()) attr = nit->second;
          std::size_t vend = text.find('<', data.body_begin);
          if (vend == std::string::npos) break;
          std::string value = text.substr(data.body_begin, vend - data.body_begin);
          if (attr == "lat") {
            n.lat = parse_double_field(value, "lat", 0);
            has_lat = true;
          } else if (attr == "lon") {
            n.lon = parse_double_field(value, "lon", 0);
            has_lon = true;
          }
        }
        pos = body_end + 7;
      }
      if (!has_lat || !has_lon) {
        throw ParseError("graphml node '" + idat->second + "' lacks lat/lon");
      }
      nodes.push_back(n);
    } else if (tag.name == "edge") {
      auto s = tag.attrs.find("source");
      auto t = tag.attrs.find("target");
      if (s == tag.attrs.end() || t == tag.attrs.end()) {
        throw ParseError("graphml edge without source/target");
      }
      auto su = raw_ids.find(s->second);
      auto tv = raw_ids.find(t->second);
      if (su == raw_ids.end() || tv == raw_ids.end()) {
        throw ValidationError("graphml edge references undeclared node");
      }
      edges.emplace_back(su->second, tv->second);
    }
  }
  if (nodes.empty()) throw ParseError("graphml contains no nodes: " + path.string());
  return build_network(std::move(nodes), edges, warnings);
}

}  // namespace

std::string network_to_json(const SpatialNetwork& net) {
  nlohmann::json j;
  j["format"] = "gca-net/1";
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : net.nodes) nodes.push_back({n.id, n.lat, n.lon});
  j["nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t u = 0; u < net.node_count(); ++u) {
    for (std::uint32_t v : net.adjacency[u]) {
      if (u < v) edges.push_back({net.nodes[u].id, net.nodes[v].id});
    }
  }
  j["edges"] = std::move(edges);
  nlohmann::json d = nlohmann::json::array();
  nlohmann::json theta = nlohmann::json::array();
  for (std::size_t u = 0; u < net.node_count(); ++u) {
    for (std::size_t k = 0; k < net.adjacency[u].size(); ++k) {
      d.push_back(net.features[u][k].d);
      theta.push_back(net.features[u][k].theta);
    }
  }
  j["features"] = {{"d", std::move(d)}, {"theta", std::move(theta)}};
  return j.dump(2) + "\n";
}

SpatialNetwork network_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("network json: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != "gca-net/1") {
    throw ParseError("network json: missing or unsupported format marker");
  }
  std::vector<SpatialNode> nodes;
  for (const auto& row : j.at("nodes")) {
    if (!row.is_array() || row.size() != 3) throw ParseError("network json: bad node row");
    nodes.push_back({row[0].get<std::int64_t>(), row[1].get<double>(), row[2].get<double>()});
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (const auto& row : j.at("edges")) {
    if (!row.is_array() || row.size() != 2) throw ParseError("network json: bad edge row");
    edges.emplace_back(row[0].get<std::int64_t>(), row[1].get<std::int64_t>());
  }
  Warnings cleanup;
  SpatialNetwork net = build_network(std::move(nodes), edges, &cleanup);
  if (j.contains("features") && cleanup.empty()) {
    const auto& f = j["features"];
    const auto& d = f.at("d");
    const auto& theta = f.at("theta");
    std::size_t half = 0;
    for (const auto& adj : net.adjacency) half += adj.size();
    if (d.size() == half && theta.size() == half) {
      std::size_t pos = 0;
      for (std::size_t u = 0; u < net.node_count(); ++u) {
        for (std::size_t k = 0; k < net.adjacency[u].size(); ++k, ++pos) {
          net.features[u][k].d = d[pos].get<double>();
          net.features[u][k].theta = theta[pos].get<double>();
        }
      }
    }
  }
  return net;
}

SpatialNetwork load_network(const std::filesystem::path& path, NetworkFormat format,
                            Warnings* warnings) {
  if (format == NetworkFormat::Auto) {
    if (std::filesystem::is_directory(path)) {
      format = NetworkFormat::EdgeListCsv;
    } else if (path.extension() == ".graphml") {
      format = NetworkFormat::GraphMl;
    } else if (path.extension() == ".json") {
      format = NetworkFormat::Json;
    } else {
      throw ConfigError("cannot infer network format from path: " + path.string());
    }
  }
  switch (format) {
    case NetworkFormat::EdgeListCsv:
      return load_edge_list_csv(path, warnings);
    case NetworkFormat::GraphMl:
      return load_graphml(path, warnings);
    case NetworkFormat::Json:
      return network_from_json(read_text_file(path));
    default:
      throw ConfigError("unsupported network format");
  }
}

void save_network(const SpatialNetwork& net, const std::filesystem::path& path) {
  write_text_file(path, network_to_json(net));
}

TileSet tile_split(const SpatialNetwork& net, double window_m, double tile_m,
                   std::size_t min_nodes, Warnings* warnings) {
  if (net.node_count() == 0) throw ValidationError("tile_split: empty network");
  if (tile_m <= 0 || window_m < tile_m) throw ConfigError("tile_split: bad window/tile sizes");

  double lat0 = 0;
  double lon0 = 0;
  for (const auto& n : net.nodes) {
    lat0 += n.lat;
    lon0 += n.lon;
  }
  lat0 /= static_cast<double>(net.node_count());
  lon0 /= static_cast<double>(net.node_count());

  const int cells = static_cast<int>(std::floor(window_m / tile_m + 1e-9));
  const double half = window_m / 2.0;
  const double coslat = std::cos(lat0 * kDegToRad);

  // Cell of each node under a local equirectangular projection; -1 = outside.
  std::vector<int> cx(net.node_count(), -1);
  std::vector<int> cy(net.node_count(), -1);
  for (std::size_t u = 0; u < net.node_count(); ++u) {
    const double x = kEarthRadiusM * coslat * (net.nodes[u].lon - lon0) * kDegToRad;
    const double y = kEarthRadiusM * (net.nodes[u].lat - lat0) * kDegToRad;
    const int ix = static_cast<int>(std::floor((x + half) / tile_m));
    const int iy = static_cast<int>(std::floor((y + half) / tile_m));
    if (ix >= 0 && ix < cells && iy >= 0 && iy < cells) {
      cx[u] = ix;
      cy[u] = iy;
    }
  }

  std::map<std::pair<int, int>, std::vector<std::size_t>> members;
  for (std::size_t u = 0; u < net.node_count(); ++u) {
    if (cx[u] >= 0) members[{cx[u], cy[u]}].push_back(u);
  }

  TileSet out;
  out.origin_lat = lat0;
  out.origin_lon = lon0;
  out.window_m = window_m;
  out.tile_m = tile_m;
  for (const auto& [cell, us] : members) {
    if (us.size() < min_nodes) continue;
    std::vector<SpatialNode> tile_nodes;
    tile_nodes.reserve(us.size());
    for (std::size_t u : us) tile_nodes.push_back(net.nodes[u]);
    std::vector<std::pair<std::int64_t, std::int64_t>> tile_edges;
    for (std::size_t u : us) {
      for (std::uint32_t v : net.adjacency[u]) {
        if (u < v && cx[v] == cell.first && cy[v] == cell.second) {
          tile_edges.emplace_back(net.nodes[u].id, net.nodes[v].id);
        }
      }
    }
    Tile t;
    t.ix = cell.first;
    t.iy = cell.second;
    t.net = build_network(std::move(tile_nodes), tile_edges, warnings);
    out.tiles.push_back(std::move(t));
  }
  if (out.tiles.empty()) throw ValidationError("tile_split: no tiles retained");
  return out;
}

}  // namespace gcasim
