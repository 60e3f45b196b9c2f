#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "trustguard/error.hpp"
#include "trustguard/graph.hpp"

using namespace trustguard;

namespace {

constexpr Level D = 0;  // Distrust
constexpr Level T = 1;  // Trust

DynamicGraph graph_of(std::vector<TrustEdge> edges, std::size_t nodes = 0) {
  return make_graph(TrustLevelScheme::bitcoin(), std::move(edges), nodes);
}

DynamicGraph parse(const std::string& text, const LoadOptions& options = {}) {
  std::istringstream in(text);
  return parse_edge_list(in, TrustLevelScheme::bitcoin(), options);
}

std::vector<TrustEdge> random_edges(std::mt19937_64& rng, std::size_t count, std::size_t nodes) {
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(nodes - 1));
  std::uniform_int_distribution<int> ts(0, 1000);
  std::bernoulli_distribution pos(0.8);
  std::vector<TrustEdge> out;
  while (out.size() < count) {
    const NodeId a = node(rng), b = node(rng);
    if (a == b) continue;
    out.push_back({a, b, pos(rng) ? T : D, static_cast<double>(ts(rng))});
  }
  return out;
}

std::size_t total_edges(const std::vector<Snapshot>& s) {
  std::size_t n = 0;
  for (const auto& x : s) n += x.edges().size();
  return n;
}

}  // namespace

TEST_CASE("rating schemes") {
  const auto b = TrustLevelScheme::bitcoin();
  CHECK(b.cardinality() == 2);
  CHECK(b.map_rating(-10) == D);
  CHECK(b.map_rating(-1) == D);
  CHECK(b.map_rating(1) == T);
  CHECK(b.map_rating(10) == T);
  CHECK_THROWS_AS(b.map_rating(0), Error);
  CHECK(b.level_for(Polarity::Positive) == T);
  CHECK(b.max_trust_level() == T);
  const auto a = TrustLevelScheme::advogato();
  CHECK(a.cardinality() == 4);
  CHECK(a.map_rating(0.8) == 2);
  CHECK_FALSE(a.has_polarity());
  CHECK_THROWS_AS(TrustLevelScheme::by_name("nope"), Error);
}

TEST_CASE("loader remaps identifiers densely in first-appearance order") {
  const auto g = parse("7,42,5,100\n42,7,-3,50\n7,42,1,75\n");
  CHECK(g.node_count == 2);
  CHECK(g.edges.size() == 3);
  CHECK(g.original_ids == std::vector<std::string>{"7", "42"});
  // sorted by time: 50, 75, 100
  CHECK(g.edges[0] == TrustEdge{1, 0, D, 50});
  CHECK(g.edges[1] == TrustEdge{0, 1, T, 75});
  CHECK(g.edges[2] == TrustEdge{0, 1, T, 100});
  CHECK(g.min_timestamp == 50);
  CHECK(g.max_timestamp == 100);
}

TEST_CASE("loader handles empty input, comments and whitespace separation") {
  const auto empty = parse("");
  CHECK(empty.node_count == 0);
  CHECK(empty.edges.empty());
  const auto g = parse("# header\n\n1 2 4 10\n2\t3\t-2\t11.5\n");
  CHECK(g.node_count == 3);
  CHECK(g.edges[1].timestamp == 11.5);
}

TEST_CASE("loader errors carry line numbers") {
  auto message_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message_of("1,2,3,4\n1,2,3\n").find("line 2") != std::string::npos);
  CHECK(message_of("1,2,abc,4\n").find("line 1") != std::string::npos);
  CHECK(message_of("1,2,3,4\n\n1,2,0,5\n").find("line 3") != std::string::npos);
  CHECK(message_of("3,3,1,1\n").find("self-loop") != std::string::npos);
  LoadOptions allow;
  allow.allow_self_loops = true;
  CHECK(parse("3,3,1,1\n", allow).edges.size() == 1);
}

TEST_CASE("time-driven segmentation") {
  const auto g = graph_of({{0, 1, T, 0}, {1, 2, T, 5}, {2, 0, D, 10}, {0, 2, T, 15}});
  const auto s = segment_time_driven(g, 2);
  REQUIRE(s.size() == 2);
  CHECK(s[0].window_start() == 0);
  CHECK(s[0].window_end() == 7.5);
  CHECK_FALSE(s[0].right_closed());
  CHECK(s[1].right_closed());
  CHECK(s[1].window_end() == 15);
  CHECK(s[0].edges().size() == 2);
  CHECK(s[1].edges().size() == 2);
  const auto one = segment_time_driven(g, 1);
  CHECK(one.size() == 1);
  CHECK(one[0].edges().size() == 4);
  CHECK_THROWS_AS(segment_time_driven(g, 0), Error);
  CHECK_THROWS_AS(segment_time_driven(graph_of({}), 3), Error);
  // More snapshots than distinct timestamps: allowed, some windows empty.
  const auto many = segment_time_driven(g, 8);
  CHECK(many.size() == 8);
  CHECK(total_edges(many) == 4);
}

TEST_CASE("event-driven segmentation gives the remainder to earlier snapshots") {
  std::vector<TrustEdge> edges;
  for (int i = 0; i < 10; ++i) edges.push_back({0, 1, T, static_cast<double>(i)});
  auto sizes = [](const std::vector<Snapshot>& s) {
    std::vector<std::size_t> out;
    for (const auto& x : s) out.push_back(x.edges().size());
    return out;
  };
  CHECK(sizes(segment_event_driven(graph_of(edges), 5)) == std::vector<std::size_t>(5, 2));
  edges.resize(7);
  CHECK(sizes(segment_event_driven(graph_of(edges), 3)) == std::vector<std::size_t>{3, 2, 2});
  CHECK(sizes(segment_event_driven(graph_of(edges), 7)) == std::vector<std::size_t>(7, 1));
}

TEST_CASE("segmentation partitions and orders edges (property)") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = graph_of(random_edges(rng, 50 + trial * 7, 20));
    for (std::size_t n : {1u, 2u, 3u, 7u, 10u}) {
      for (bool time : {true, false}) {
        const auto snaps = time ? segment_time_driven(g, n) : segment_event_driven(g, n);
        REQUIRE(snaps.size() == n);
        std::vector<TrustEdge> joined;
        for (const auto& s : snaps) joined.insert(joined.end(), s.edges().begin(), s.edges().end());
        CHECK(joined == g.edges);  // content, count and order
        for (std::size_t i = 0; i + 1 < n; ++i) {
          if (time) {
            CHECK(snaps[i].window_end() <= snaps[i + 1].window_start() + 1e-9);
            for (const auto& e : snaps[i].edges()) CHECK(snaps[i].window_contains(e.timestamp));
          } else if (!snaps[i].edges().empty() && !snaps[i + 1].edges().empty()) {
            CHECK(snaps[i].edges().back().timestamp <= snaps[i + 1].edges().front().timestamp);
          }
        }
      }
    }
  }
}

TEST_CASE("neighbor sets") {
  const NodeId u = 0, v = 1, a = 2, b = 3, c = 4;
  const Snapshot single(0, 0, 1, true, {{u, v, T, 0}});
  CHECK(single.neighbor_sets(v).first.empty());
  CHECK(single.neighbor_sets(v).second == std::vector<NodeId>{u});
  CHECK(single.neighbor_sets(u).first == std::vector<NodeId>{v});
  CHECK(single.neighbor_sets(u).second.empty());
  const Snapshot s(0, 0, 1, true, {{a, u, T, 0}, {b, u, D, 0}, {u, c, T, 0}});
  auto [tr, te] = s.neighbor_sets(u);
  std::sort(te.begin(), te.end());
  CHECK(tr == std::vector<NodeId>{c});
  CHECK(te == std::vector<NodeId>{a, b});
  CHECK(s.neighbor_sets(99).first.empty());
  CHECK(s.nodes() == std::vector<NodeId>{u, a, b, c});
}

TEST_CASE("dual-role consistency and parallel edges (property)") {
  std::mt19937_64 rng(8);
  const auto edges = random_edges(rng, 200, 15);
  const Snapshot s(0, 0, 1000, true, edges);
  std::map<std::pair<NodeId, NodeId>, int> from_tr, from_te;
  for (NodeId n = 0; n < 15; ++n) {
    const auto [tr, te] = s.neighbor_sets(n);
    for (NodeId m : tr) ++from_tr[{n, m}];
    for (NodeId m : te) ++from_te[{m, n}];
  }
  CHECK(from_tr == from_te);
  std::size_t total = 0;
  for (const auto& [k, c] : from_tr) total += c;
  CHECK(total == edges.size());
}

TEST_CASE("node labels use strict majority of incident edges") {
  // node 0: 3 Trust in, 1 Distrust in -> Good; node 5: one each -> Bad.
  const std::vector<TrustEdge> edges = {{1, 0, T, 0}, {2, 0, T, 0}, {3, 0, T, 0}, {4, 0, D, 0},
                                        {6, 5, T, 0}, {7, 5, D, 0}};
  const auto labels = label_nodes(edges, TrustLevelScheme::bitcoin());
  const LabelIndex index(labels);
  CHECK(index[0] == NodeClass::Good);
  CHECK(index[5] == NodeClass::Bad);
  CHECK_FALSE(index[42].has_value());
  CHECK(labels.size() == 8);
  CHECK_THROWS_AS(label_nodes(edges, TrustLevelScheme::advogato()), Error);
}

TEST_CASE("edge homophily ratio") {
  const std::vector<TrustEdge> edges = {{0, 1, T, 0}, {1, 2, T, 0}, {2, 3, T, 0}};
  const std::vector<NodeLabel> labels = {
      {0, NodeClass::Good}, {1, NodeClass::Good}, {2, NodeClass::Good}, {3, NodeClass::Bad}};
  CHECK(edge_homophily_ratio(edges, labels) == doctest::Approx(2.0 / 3.0));
  const std::vector<NodeLabel> all_good = {
      {0, NodeClass::Good}, {1, NodeClass::Good}, {2, NodeClass::Good}, {3, NodeClass::Good}};
  CHECK(edge_homophily_ratio(edges, all_good) == 1.0);
  CHECK_THROWS_AS(edge_homophily_ratio({}, labels), Error);
  CHECK_THROWS_AS(edge_homophily_ratio(edges, std::vector<NodeLabel>{{0, NodeClass::Good}}), Error);
}

TEST_CASE("homophily is invariant to node relabelling (property)") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto edges = random_edges(rng, 80, 12);
    const auto labels = label_nodes(edges, TrustLevelScheme::bitcoin());
    const double r = edge_homophily_ratio(edges, labels);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    std::vector<NodeId> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (auto& e : edges) {
      e.source = perm[e.source];
      e.target = perm[e.target];
    }
    CHECK(edge_homophily_ratio(edges, label_nodes(edges, TrustLevelScheme::bitcoin())) == r);
  }
}

TEST_CASE("snapshot manifest has one record per snapshot") {
  const auto g = graph_of({{0, 1, T, 0}, {1, 2, T, 5}, {2, 0, D, 10}});
  const auto s = segment_time_driven(g, 3);
  std::ostringstream out;
  write_snapshot_manifest(out, s);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("\"edges\":1") != std::string::npos);
}
