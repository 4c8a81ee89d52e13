#pragma once

#include "gcasim/graph.hpp"

namespace gcasim {

// Synthetic street-network stand-ins with distinct structural signatures:
// jittered square grids, random geometric graphs, and radial branching
// trees. Coordinates sit near the equator at ~100 m edge scale.
enum class SynthFamily { Grid, Rgg, Tree };

const char* synth_family_name(SynthFamily family);
SynthFamily synth_family_from_name(const std::string& name);

// Deterministic in (family, target_nodes, seed). The realized node count
// tracks target_nodes approximately (exactly for Rgg).
SpatialNetwork synth_network(SynthFamily family, std::size_t target_nodes, std::uint64_t seed);

struct SynthCorpus {
  std::vector<std::string> names;
  std::vector<SpatialNetwork> nets;
  std::vector<int> family_labels;  // index into the family enum order
};

// per_family networks of each family with sizes spread evenly across
// [min_nodes, max_nodes].
SynthCorpus synth_family_corpus(std::size_t per_family, std::size_t min_nodes,
                                std::size_t max_nodes, std::uint64_t seed);

}  // namespace gcasim
