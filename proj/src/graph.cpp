#include "trustguard/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "trustguard/error.hpp"
#include "trustguard/log.hpp"

namespace trustguard {

// ---- TrustLevelScheme -----------------------------------------------------

Level TrustLevelScheme::map_rating(double rating) const {
  for (const auto& r : rating_map) {
    if (rating >= r.lo && rating <= r.hi) return r.level;
  }
  std::ostringstream msg;
  msg << "rating " << rating << " is not covered by scheme '" << name << "'";
  fail(ErrorKind::Data, msg.str());
}

Level TrustLevelScheme::level_for(Polarity p) const {
  if (!has_polarity()) {
    fail(ErrorKind::Config, "scheme '" + name + "' has no positive/negative designation");
  }
  // Highest matching index: the most trusting positive / least trusting negative.
  std::optional<Level> found;
  for (Level l = 0; l < polarity.size(); ++l) {
    if (polarity[l] != p) continue;
    if (!found || p == Polarity::Positive) found = l;
  }
  if (!found) fail(ErrorKind::Config, "scheme '" + name + "' lacks a level of that polarity");
  return *found;
}

void TrustLevelScheme::validate() const {
  if (cardinality() < 2) fail(ErrorKind::Config, "scheme '" + name + "' needs at least 2 levels");
  for (const auto& r : rating_map) {
    if (r.level >= cardinality() || r.lo > r.hi) {
      fail(ErrorKind::Config, "scheme '" + name + "' has an invalid rating range");
    }
  }
  if (!polarity.empty() && polarity.size() != cardinality()) {
    fail(ErrorKind::Config, "scheme '" + name + "' polarity does not cover every level");
  }
}

TrustLevelScheme TrustLevelScheme::bitcoin() {
  return TrustLevelScheme{
      "bitcoin",
      {"Distrust", "Trust"},
      {{-10.0, -1.0, 0}, {1.0, 10.0, 1}},
      {Polarity::Negative, Polarity::Positive},
  };
}

TrustLevelScheme TrustLevelScheme::advogato() {
  return TrustLevelScheme{
      "advogato",
      {"Observer", "Apprentice", "Journeyer", "Master"},
      {{0.35, 0.45, 0}, {0.55, 0.65, 1}, {0.75, 0.85, 2}, {0.95, 1.05, 3}},
      {},
  };
}

TrustLevelScheme TrustLevelScheme::by_name(const std::string& name) {
  if (name == "bitcoin") return bitcoin();
  if (name == "advogato") return advogato();
  fail(ErrorKind::Config, "unknown trust-level scheme '" + name + "'");
}

// ---- Snapshot -------------------------------------------------------------

Snapshot::Snapshot(std::size_t index, double window_start, double window_end, bool right_closed,
                   std::vector<TrustEdge> edges)
    : index_(index),
      window_start_(window_start),
      window_end_(window_end),
      right_closed_(right_closed),
      edges_(std::move(edges)) {
  std::vector<NodeId> nodes;
  nodes.reserve(edges_.size() * 2);
  for (const auto& e : edges_) {
    nodes.push_back(e.source);
    nodes.push_back(e.target);
    if (e.source == e.target) continue;
    out_neighbors_[e.source].push_back(e.target);
    in_neighbors_[e.target].push_back(e.source);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  nodes_ = std::move(nodes);
}

bool Snapshot::contains(NodeId node) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), node);
}

bool Snapshot::window_contains(double timestamp) const {
  if (timestamp < window_start_) return false;
  return right_closed_ ? timestamp <= window_end_ : timestamp < window_end_;
}

std::pair<std::vector<NodeId>, std::vector<NodeId>> Snapshot::neighbor_sets(NodeId node) const {
  std::pair<std::vector<NodeId>, std::vector<NodeId>> out;
  if (auto it = out_neighbors_.find(node); it != out_neighbors_.end()) out.first = it->second;
  if (auto it = in_neighbors_.find(node); it != in_neighbors_.end()) out.second = it->second;
  return out;
}

// ---- DynamicGraph ---------------------------------------------------------

std::size_t DynamicGraph::count_level(Level level) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [level](const TrustEdge& e) { return e.level == level; }));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Comma-separated when the line has a comma, whitespace-separated otherwise.
std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  if (line.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return fields;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

double parse_number(std::string_view text, std::size_t line_no, const char* what) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": invalid " + what + " '" +
                              std::string(text) + "'");
  }
  return value;
}

void finish_graph(DynamicGraph& g) {
  std::stable_sort(g.edges.begin(), g.edges.end(),
                   [](const TrustEdge& a, const TrustEdge& b) { return a.timestamp < b.timestamp; });
  if (!g.edges.empty()) {
    g.min_timestamp = g.edges.front().timestamp;
    g.max_timestamp = g.edges.back().timestamp;
  }
}

}  // namespace

DynamicGraph parse_edge_list(std::istream& in, const TrustLevelScheme& scheme,
                             const LoadOptions& options) {
  scheme.validate();
  DynamicGraph g;
  g.scheme = scheme;
  std::unordered_map<std::string, NodeId> ids;
  auto intern = [&](std::string_view raw) {
    auto [it, inserted] = ids.emplace(std::string(raw), static_cast<NodeId>(ids.size()));
    if (inserted) g.original_ids.emplace_back(raw);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view(line);
    const auto first = view.find_first_not_of(" \t");
    if (first == std::string_view::npos || view[first] == '#') continue;
    const auto fields = split_fields(view.substr(first));
    if (fields.size() != 4) {
      fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": expected 4 fields " +
                                "(source,target,rating,timestamp), got " +
                                std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": empty node identifier");
    }
    const double rating = parse_number(fields[2], line_no, "rating");
    const double ts = parse_number(fields[3], line_no, "timestamp");
    if (fields[0] == fields[1] && !options.allow_self_loops) {
      fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": self-loop on node " +
                                std::string(fields[0]));
    }
    TrustEdge e;
    e.source = intern(fields[0]);
    e.target = intern(fields[1]);
    try {
      e.level = scheme.map_rating(rating);
    } catch (const Error& err) {
      fail(ErrorKind::Data, "line " + std::to_string(line_no) + ": " + err.what());
    }
    e.timestamp = ts;
    g.edges.push_back(e);
  }
  g.node_count = ids.size();
  finish_graph(g);
  return g;
}

DynamicGraph load_edge_list(const std::filesystem::path& path, const TrustLevelScheme& scheme,
                            const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Data, "cannot open edge list " + path.string());
  return parse_edge_list(in, scheme, options);
}

DynamicGraph make_graph(TrustLevelScheme scheme, std::vector<TrustEdge> edges,
                        std::size_t node_count) {
  scheme.validate();
  DynamicGraph g;
  g.scheme = std::move(scheme);
  std::size_t max_id = 0;
  for (const auto& e : edges) {
    if (e.level >= g.scheme.cardinality()) fail(ErrorKind::Data, "edge level outside scheme");
    if (!std::isfinite(e.timestamp)) fail(ErrorKind::Data, "edge timestamp is not finite");
    max_id = std::max<std::size_t>(max_id, std::max(e.source, e.target) + 1);
  }
  g.node_count = std::max(node_count, max_id);
  g.edges = std::move(edges);
  g.original_ids.reserve(g.node_count);
  for (std::size_t i = 0; i < g.node_count; ++i) g.original_ids.push_back(std::to_string(i));
  finish_graph(g);
  return g;
}

// ---- segmentation ---------------------------------------------------------

std::vector<Snapshot> segment_time_driven(const DynamicGraph& graph, std::size_t count) {
  if (count == 0) fail(ErrorKind::Config, "segment_time_driven: snapshot count must be >= 1");
  if (graph.edges.empty()) fail(ErrorKind::Data, "segment_time_driven: graph has no edges");

  std::set<double> distinct;
  for (const auto& e : graph.edges) {
    distinct.insert(e.timestamp);
    if (distinct.size() >= count) break;
  }
  if (distinct.size() < count) {
    log_warning("segment_time_driven: " + std::to_string(count) +
                " snapshots exceed the number of distinct timestamps; some will be empty");
  }

  const double lo = graph.min_timestamp;
  const double hi = graph.max_timestamp;
  const double width = (hi - lo) / static_cast<double>(count);
  std::vector<std::vector<TrustEdge>> buckets(count);
  for (const auto& e : graph.edges) {
    std::size_t k = 0;
    if (width > 0.0) {
      k = static_cast<std::size_t>(std::floor((e.timestamp - lo) / width));
      // Window i is [lo + i*w, lo + (i+1)*w); guard floating-point drift at bounds.
      while (k > 0 && e.timestamp < lo + static_cast<double>(k) * width) --k;
      while (k + 1 < count && e.timestamp >= lo + static_cast<double>(k + 1) * width) ++k;
      k = std::min(k, count - 1);
    }
    buckets[k].push_back(e);
  }
  std::vector<Snapshot> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double start = lo + static_cast<double>(i) * width;
    const double end = (i + 1 == count) ? hi : lo + static_cast<double>(i + 1) * width;
    out.emplace_back(i, start, end, i + 1 == count, std::move(buckets[i]));
  }
  return out;
}

std::vector<Snapshot> segment_event_driven(std::span<const TrustEdge> edges, std::size_t count) {
  if (count == 0) fail(ErrorKind::Config, "segment_event_driven: snapshot count must be >= 1");
  if (!std::is_sorted(edges.begin(), edges.end(), [](const TrustEdge& a, const TrustEdge& b) {
        return a.timestamp < b.timestamp;
      })) {
    fail(ErrorKind::Data, "segment_event_driven: edges are not in chronological order");
  }
  if (count > edges.size()) {
    log_warning("segment_event_driven: more snapshots than events; some will be empty");
  }
  const std::size_t base = edges.size() / count;
  const std::size_t extra = edges.size() % count;
  std::vector<Snapshot> out;
  out.reserve(count);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = base + (i < extra ? 1 : 0);
    std::vector<TrustEdge> chunk(edges.begin() + static_cast<std::ptrdiff_t>(pos),
                                 edges.begin() + static_cast<std::ptrdiff_t>(pos + n));
    double start = 0.0, end = 0.0;
    if (!chunk.empty()) {
      start = chunk.front().timestamp;
      end = chunk.back().timestamp;
    } else if (!out.empty()) {
      start = end = out.back().window_end();
    }
    out.emplace_back(i, start, end, true, std::move(chunk));
    pos += n;
  }
  return out;
}

std::vector<Snapshot> segment_event_driven(const DynamicGraph& graph, std::size_t count) {
  return segment_event_driven(std::span<const TrustEdge>(graph.edges), count);
}

// ---- labels and homophily -------------------------------------------------

std::vector<NodeLabel> label_nodes(std::span<const TrustEdge> edges, const TrustLevelScheme& scheme) {
  if (!scheme.has_polarity()) {
    fail(ErrorKind::Config, "label_nodes: scheme '" + scheme.name +
                                "' has no positive/negative designation; labeling unsupported");
  }
  std::unordered_map<NodeId, std::pair<std::size_t, std::size_t>> counts;  // (positive, negative)
  for (const auto& e : edges) {
    const bool positive = scheme.polarity.at(e.level) == Polarity::Positive;
    for (NodeId n : {e.source, e.target}) {
      auto& c = counts[n];
      (positive ? c.first : c.second) += 1;
      if (e.source == e.target) break;
    }
  }
  std::vector<NodeLabel> labels;
  labels.reserve(counts.size());
  for (const auto& [node, c] : counts) {
    labels.push_back({node, c.first > c.second ? NodeClass::Good : NodeClass::Bad});
  }
  std::sort(labels.begin(), labels.end(),
            [](const NodeLabel& a, const NodeLabel& b) { return a.node < b.node; });
  return labels;
}

LabelIndex::LabelIndex(std::span<const NodeLabel> labels) {
  NodeId max_id = 0;
  for (const auto& l : labels) max_id = std::max(max_id, l.node);
  dense_.assign(labels.empty() ? 0 : max_id + 1, -1);
  for (const auto& l : labels) dense_[l.node] = static_cast<std::int8_t>(l.label);
  count_ = labels.size();
}

std::optional<NodeClass> LabelIndex::operator[](NodeId node) const {
  if (node >= dense_.size() || dense_[node] < 0) return std::nullopt;
  return static_cast<NodeClass>(dense_[node]);
}

double edge_homophily_ratio(std::span<const TrustEdge> edges, std::span<const NodeLabel> labels) {
  if (edges.empty()) fail(ErrorKind::Data, "edge_homophily_ratio: undefined for an empty edge set");
  const LabelIndex index(labels);
  std::size_t same = 0;
  for (const auto& e : edges) {
    const auto a = index[e.source];
    const auto b = index[e.target];
    if (!a || !b) {
      fail(ErrorKind::Data, "edge_homophily_ratio: edge endpoint without a label");
    }
    if (*a == *b) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(edges.size());
}

void write_snapshot_manifest(std::ostream& out, std::span<const Snapshot> snapshots) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto& s : snapshots) {
    out << "{\"index\":" << s.index() << ",\"window_start\":" << s.window_start()
        << ",\"window_end\":" << s.window_end()
        << ",\"right_closed\":" << (s.right_closed() ? "true" : "false")
        << ",\"nodes\":" << s.nodes().size() << ",\"edges\":" << s.edges().size() << "}\n";
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace trustguard
