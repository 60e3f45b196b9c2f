#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace trustguard {

using NodeId = std::uint32_t;
using Level = std::uint32_t;

enum class Polarity { Positive, Negative };

// Maps raw ratings onto discrete trust levels. Level indices are ordered from
// least to most trusting, so the last index is the maximal-trust level.
struct TrustLevelScheme {
  struct Range {
    double lo;  // inclusive
    double hi;  // inclusive
    Level level;
  };

  std::string name;
  std::vector<std::string> level_names;
  std::vector<Range> rating_map;
  // Empty when the scheme has no Good/Bad interpretation (multi-level schemes).
  std::vector<Polarity> polarity;

  std::size_t cardinality() const { return level_names.size(); }
  bool has_polarity() const { return polarity.size() == cardinality(); }
  Level max_trust_level() const { return static_cast<Level>(cardinality() - 1); }
  // Throws a Data error when no range covers the rating.
  Level map_rating(double rating) const;
  // Throws a Config error when the scheme has no polarity designation.
  Level level_for(Polarity p) const;
  void validate() const;

  // Distrust = [-10,-1] (index 0), Trust = [1,10] (index 1).
  static TrustLevelScheme bitcoin();
  // Observer/Apprentice/Journeyer/Master from ratings 0.4/0.6/0.8/1.0.
  static TrustLevelScheme advogato();
  static TrustLevelScheme by_name(const std::string& name);
};

struct TrustEdge {
  NodeId source = 0;  // trustor
  NodeId target = 0;  // trustee
  Level level = 0;
  double timestamp = 0.0;

  bool operator==(const TrustEdge&) const = default;
};

class Snapshot {
 public:
  Snapshot() = default;
  Snapshot(std::size_t index, double window_start, double window_end, bool right_closed,
           std::vector<TrustEdge> edges);

  std::size_t index() const { return index_; }
  double window_start() const { return window_start_; }
  double window_end() const { return window_end_; }
  bool right_closed() const { return right_closed_; }
  const std::vector<TrustEdge>& edges() const { return edges_; }
  // Sorted endpoints of all edges (self-loops included as nodes).
  const std::vector<NodeId>& nodes() const { return nodes_; }
  bool contains(NodeId node) const;
  bool window_contains(double timestamp) const;

  // (trustor-role neighbors, trustee-role neighbors): targets of out-edges and
  // sources of in-edges, one entry per edge, self-loops excluded.
  std::pair<std::vector<NodeId>, std::vector<NodeId>> neighbor_sets(NodeId node) const;

 private:
  std::size_t index_ = 0;
  double window_start_ = 0.0;
  double window_end_ = 0.0;
  bool right_closed_ = false;
  std::vector<TrustEdge> edges_;
  std::vector<NodeId> nodes_;
  std::unordered_map<NodeId, std::vector<NodeId>> out_neighbors_;
  std::unordered_map<NodeId, std::vector<NodeId>> in_neighbors_;
};

struct DynamicGraph {
  TrustLevelScheme scheme;
  std::vector<TrustEdge> edges;  // non-decreasing timestamps
  std::size_t node_count = 0;
  double min_timestamp = 0.0;
  double max_timestamp = 0.0;
  std::vector<std::string> original_ids;  // dense id -> identifier in the source file

  std::size_t count_level(Level level) const;
};

struct LoadOptions {
  bool allow_self_loops = false;
};

DynamicGraph load_edge_list(const std::filesystem::path& path, const TrustLevelScheme& scheme,
                            const LoadOptions& options = {});
DynamicGraph parse_edge_list(std::istream& in, const TrustLevelScheme& scheme,
                             const LoadOptions& options = {});
// Builds a graph from already-dense edges; sorts them by timestamp.
DynamicGraph make_graph(TrustLevelScheme scheme, std::vector<TrustEdge> edges,
                        std::size_t node_count = 0);

std::vector<Snapshot> segment_time_driven(const DynamicGraph& graph, std::size_t count);
std::vector<Snapshot> segment_event_driven(const DynamicGraph& graph, std::size_t count);
std::vector<Snapshot> segment_event_driven(std::span<const TrustEdge> edges, std::size_t count);

enum class NodeClass : std::uint8_t { Good, Bad };

struct NodeLabel {
  NodeId node = 0;
  NodeClass label = NodeClass::Bad;
};

// Good iff positive incident edges strictly outnumber negative ones.
std::vector<NodeLabel> label_nodes(std::span<const TrustEdge> edges, const TrustLevelScheme& scheme);

// Dense lookup over node ids; nodes without a label map to nullopt.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(std::span<const NodeLabel> labels);
  std::optional<NodeClass> operator[](NodeId node) const;
  std::size_t size() const { return count_; }

 private:
  std::vector<std::int8_t> dense_;
  std::size_t count_ = 0;
};

double edge_homophily_ratio(std::span<const TrustEdge> edges, std::span<const NodeLabel> labels);

// One JSON object per line: index, window bounds, node and edge counts.
void write_snapshot_manifest(std::ostream& out, std::span<const Snapshot> snapshots);

}  // namespace trustguard
