#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gcasim/graph.hpp"
#include "gcasim/io_util.hpp"
#include "test_support.hpp"

using namespace gcasim;
namespace fs = std::filesystem;

namespace {

SpatialNetwork path3() {
  // Three collinear nodes on the equator, 0.01 degrees apart.
  return build_network({{0, 0.0, 0.0}, {1, 0.0, 0.01}, {2, 0.0, 0.02}}, {{0, 1}, {1, 2}});
}

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("haversine matches the one-degree equator arc") {
  // R * pi / 180 for one degree of longitude on the equator.
  CHECK(std::abs(haversine_m(0, 0, 0, 1) - 111194.9) < 0.1);
  CHECK(haversine_m(10, 20, 10, 20) == 0.0);
  // Symmetry.
  CHECK(haversine_m(12.5, 3.25, -7.0, 81.0) == doctest::Approx(haversine_m(-7.0, 81.0, 12.5, 3.25)));
}

TEST_CASE("azimuth compass directions") {
  CHECK(azimuth_deg(0, 0, 1, 0) == doctest::Approx(0.0));    // north
  CHECK(azimuth_deg(0, 0, 0, 1) == doctest::Approx(90.0));   // east
  CHECK(azimuth_deg(0, 0, -1, 0) == doctest::Approx(180.0)); // south
  CHECK(azimuth_deg(0, 0, 0, -1) == doctest::Approx(270.0)); // west
}

TEST_CASE("path graph features: equal lengths and straight angles") {
  const SpatialNetwork net = path3();
  REQUIRE(net.node_count() == 3);
  REQUIRE(net.degree(1) == 2);
  // Middle node: both edges the longest incident edge, both gaps 180.
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(net.features[1][e].d == doctest::Approx(1.0));
    CHECK(net.features[1][e].theta == doctest::Approx(1.0));
  }
  // Degree-1 endpoints take the defined constants.
  CHECK(net.features[0][0].d == 1.0);
  CHECK(net.features[0][0].theta == 1.0);
  CHECK(net.features[2][0].d == 1.0);
  CHECK(net.features[2][0].theta == 1.0);
}

TEST_CASE("three-armed star angles split 0.75 / 0.5 / 0.75") {
  // Arms toward north, east and south: gaps 90/90/180.
  const SpatialNetwork net = build_network(
      {{0, 0.0, 0.0}, {1, 0.01, 0.0}, {2, 0.0, 0.01}, {3, -0.01, 0.0}},
      {{0, 1}, {0, 2}, {0, 3}});
  REQUIRE(net.degree(0) == 3);
  // Adjacency is index-sorted: 1 (north, az 0), 2 (east, az 90), 3 (south, az 180).
  CHECK(net.features[0][0].theta == doctest::Approx(0.75));
  CHECK(net.features[0][1].theta == doctest::Approx(0.5));
  CHECK(net.features[0][2].theta == doctest::Approx(0.75));
  double sum = 0;
  for (const auto& f : net.features[0]) sum += f.theta;
  CHECK(sum == doctest::Approx(2.0));
}

TEST_CASE("incident length normalization") {
  // Node 0 with arms of one and two units: d = 0.5 and 1.
  const SpatialNetwork net =
      build_network({{0, 0.0, 0.0}, {1, 0.0, 0.01}, {2, 0.0, -0.02}}, {{0, 1}, {0, 2}});
  CHECK(net.features[0][0].d == doctest::Approx(0.5));
  CHECK(net.features[0][1].d == doctest::Approx(1.0));
}

TEST_CASE("theta sums to two for every node of degree >= 2") {
  Rng rng(404);
  for (int rep = 0; rep < 10; ++rep) {
    const SpatialNetwork net = testsup::random_graph(rng, 10, 40);
    for (std::size_t u = 0; u < net.node_count(); ++u) {
      if (net.degree(u) < 2) continue;
      double sum = 0;
      for (const auto& f : net.features[u]) sum += f.theta;
      CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("cleanup: self loops, parallel edges, coincident endpoints") {
  Warnings warnings;
  const SpatialNetwork net = build_network(
      {{0, 0.0, 0.0}, {1, 0.0, 0.01}, {2, 0.0, 0.01}, {3, 0.0, 0.02}},
      {{0, 0}, {0, 1}, {1, 0}, {1, 2}, {2, 3}}, &warnings);
  // Node 2 sits exactly on node 1 and is contracted onto it; the self loop
  // and the duplicate 0-1 edge disappear.
  CHECK(net.node_count() == 3);
  CHECK(net.edge_count() == 2);
  CHECK(net.index_of(2) == -1);
  CHECK(warnings.size() >= 3);
}

TEST_CASE("duplicate ids and dangling endpoints are rejected") {
  CHECK_THROWS_AS(build_network({{0, 0, 0}, {0, 1, 1}}, {}), ValidationError);
  CHECK_THROWS_AS(build_network({{0, 0, 0}}, {{0, 5}}), ValidationError);
}

TEST_CASE("initial states are degrees") {
  const SpatialNetwork net = path3();
  CHECK(init_states(net) == std::vector<double>{1, 2, 1});
}

TEST_CASE("json round trip preserves structure and features") {
  Rng rng(77);
  const SpatialNetwork net = testsup::random_graph(rng, 12, 30);
  const SpatialNetwork back = network_from_json(network_to_json(net));
  REQUIRE(back.node_count() == net.node_count());
  for (std::size_t u = 0; u < net.node_count(); ++u) {
    CHECK(back.nodes[u].id == net.nodes[u].id);
    CHECK(back.nodes[u].lat == net.nodes[u].lat);
    CHECK(back.nodes[u].lon == net.nodes[u].lon);
    REQUIRE(back.adjacency[u] == net.adjacency[u]);
    for (std::size_t e = 0; e < net.adjacency[u].size(); ++e) {
      CHECK(back.features[u][e].d == net.features[u][e].d);
      CHECK(back.features[u][e].theta == net.features[u][e].theta);
    }
  }
}

TEST_CASE("edge list directory loader") {
  const fs::path dir = temp_dir("gcasim_csv_net");
  write_text_file(dir / "nodes.csv", "id,lat,lon\n0,0.0,0.0\n1,0.0,0.01\n2,0.0,0.02\n");
  write_text_file(dir / "edges.csv", "u,v\n0,1\n1,2\n");
  const SpatialNetwork net = load_network(dir);
  CHECK(net.node_count() == 3);
  CHECK(net.edge_count() == 2);
  CHECK(net.degree(1) == 2);

  write_text_file(dir / "edges.csv", "u,v\n0,1\nbroken\n");
  CHECK_THROWS_AS(load_network(dir), ParseError);
}

TEST_CASE("graphml loader") {
  const fs::path dir = temp_dir("gcasim_graphml");
  const fs::path file = dir / "net.graphml";
  write_text_file(file, R"(<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="node" attr.name="lat" attr.type="double"/>
  <key id="d1" for="node" attr.name="lon" attr.type="double"/>
  <graph id="G" edgedefault="undirected">
    <node id="n0"><data key="d0">0.0</data><data key="d1">0.0</data></node>
    <node id="n1"><data key="d0">0.0</data><data key="d1">0.01</data></node>
    <node id="n2"><data key="d0">0.0</data><data key="d1">0.02</data></node>
    <edge source="n0" target="n1"/>
    <edge source="n1" target="n2"/>
  </graph>
</graphml>
)");
  const SpatialNetwork net = load_network(file);
  CHECK(net.node_count() == 3);
  CHECK(net.edge_count() == 2);
  CHECK(net.degree(1) == 2);
}

TEST_CASE("tile split covers a grid and recomputes features") {
  // 1.2 km spaced 5x5 grid: every node its own tile at 1 km tiles, so use
  // min_nodes = 1 and check the cell count; then a denser grid groups nodes.
  std::vector<SpatialNode> nodes;
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  const double step = 0.0005;  // ~55 m
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      nodes.push_back({i * 12 + j, i * step, j * step});
      if (j + 1 < 12) edges.emplace_back(i * 12 + j, i * 12 + j + 1);
      if (i + 1 < 12) edges.emplace_back(i * 12 + j, (i + 1) * 12 + j);
    }
  }
  const SpatialNetwork net = build_network(std::move(nodes), edges);
  const TileSet tiles = tile_split(net, 20000.0, 300.0, 4);
  CHECK(tiles.tiles.size() > 1);
  std::size_t covered = 0;
  for (const Tile& t : tiles.tiles) {
    covered += t.net.node_count();
    CHECK(t.net.node_count() >= 4);
    // Tile features exist for every adjacency slot.
    for (std::size_t u = 0; u < t.net.node_count(); ++u)
      CHECK(t.net.features[u].size() == t.net.adjacency[u].size());
  }
  CHECK(covered <= net.node_count());
  CHECK(covered > net.node_count() / 2);

  CHECK_THROWS_AS(tile_split(net, 20000.0, 300.0, 1000), ValidationError);
}
