#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gcasim/common.hpp"

namespace gcasim {

struct SpatialNode {
  std::int64_t id = 0;
  double lat = 0;
  double lon = 0;
};

// Per directed half-edge u->v:
//   d     incident length normalized by the longest edge at u, in (0, 1]
//   theta sum of the angular gaps to the circularly adjacent incident edges
//         at u, normalized by 360 degrees, in (0, 2]
struct HalfEdgeFeature {
  double d = 1.0;
  double theta = 1.0;
};

// Undirected simple spatial graph. Nodes are sorted by id; adjacency lists
// hold node indices in ascending order; features align with adjacency.
struct SpatialNetwork {
  std::vector<SpatialNode> nodes;
  std::vector<std::vector<std::uint32_t>> adjacency;
  std::vector<std::vector<HalfEdgeFeature>> features;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t degree(std::size_t u) const { return adjacency[u].size(); }
  std::size_t edge_count() const;
  // Index of a node id, or -1 when absent.
  std::ptrdiff_t index_of(std::int64_t id) const;
};

enum class NetworkFormat { Auto, EdgeListCsv, GraphMl, Json };

inline constexpr double kEarthRadiusM = 6371000.0;

// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Forward azimuth from (lat1,lon1) to (lat2,lon2), degrees in [0, 360).
double azimuth_deg(double lat1, double lon1, double lat2, double lon2);

// Builds a cleaned network from raw nodes and id pairs: duplicate ids are
// rejected, self-loops dropped, parallel edges merged, and edges between
// exactly coincident coordinates contracted onto the smaller id.
SpatialNetwork build_network(std::vector<SpatialNode> nodes,
                             const std::vector<std::pair<std::int64_t, std::int64_t>>& edges,
                             Warnings* warnings = nullptr);

// Fills net.features from node coordinates. Degree-1 half-edges get
// d = theta = 1. Exposed separately so programmatic graphs can opt in.
void compute_edge_features(SpatialNetwork& net, Warnings* warnings = nullptr);

// Initial node states: the node degree.
std::vector<double> init_states(const SpatialNetwork& net);

// path conventions: EdgeListCsv expects a directory with nodes.csv and
// edges.csv; GraphMl a .graphml file; Json a gca-net/1 file. Auto picks by
// extension (directory -> EdgeListCsv).
SpatialNetwork load_network(const std::filesystem::path& path,
                            NetworkFormat format = NetworkFormat::Auto,
                            Warnings* warnings = nullptr);

std::string network_to_json(const SpatialNetwork& net);
SpatialNetwork network_from_json(const std::string& text);
void save_network(const SpatialNetwork& net, const std::filesystem::path& path);

struct Tile {
  int ix = 0;
  int iy = 0;
  SpatialNetwork net;
};

struct TileSet {
  double origin_lat = 0;
  double origin_lon = 0;
  double window_m = 0;
  double tile_m = 0;
  std::vector<Tile> tiles;
};

// Splits the induced subgraphs of a square window (centered on the node
// centroid) into tile_m-sized cells. Tiles with fewer than min_nodes nodes
// are discarded. Tile features are recomputed on the induced subgraph.
TileSet tile_split(const SpatialNetwork& net, double window_m = 20000.0, double tile_m = 1000.0,
                   std::size_t min_nodes = 10, Warnings* warnings = nullptr);

}  // namespace gcasim
