#pragma once

#include <cstdint>
#include <filesystem>

#include "trustguard/graph.hpp"

namespace trustguard {

// Six nodes, eight edges, timestamps 0..7; two time-driven snapshots of four
// edges each.
DynamicGraph toy_graph();

// Nodes carry a hidden Good/Bad class. Raters mostly rate Good targets with
// Trust and Bad targets with Distrust; Bad raters flip their ratings with
// probability `bad_rater_flip`. Nodes join at uniformly random times and only
// interact after joining, so later windows contain unseen nodes.
struct PlantedGraphConfig {
  std::size_t nodes = 400;
  std::size_t edges = 4000;
  double bad_fraction = 0.15;
  double rating_noise = 0.08;
  double bad_rater_flip = 0.5;
  double time_span = 1000.0;
  std::uint64_t seed = 1;
};

DynamicGraph planted_graph(const PlantedGraphConfig& config);

// source,target,rating,timestamp with ratings +5 / -5 (Bitcoin scheme).
void write_edge_list(const std::filesystem::path& path, const DynamicGraph& graph);

}  // namespace trustguard
