#include "trustguard/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "trustguard/error.hpp"

namespace trustguard {

DynamicGraph toy_graph() {
  constexpr Level D = 0, T = 1;
  // Good: 0..3, Bad: 4, 5.
  return make_graph(TrustLevelScheme::bitcoin(),
                    {{0, 1, T, 0}, {1, 2, T, 1}, {2, 4, D, 2}, {3, 5, D, 3},
                     {4, 0, D, 4}, {5, 4, T, 5}, {1, 3, T, 6}, {0, 5, D, 7}},
                    6);
}

DynamicGraph planted_graph(const PlantedGraphConfig& config) {
  if (config.nodes < 2) fail(ErrorKind::Config, "planted graph needs at least 2 nodes");
  if (!(config.bad_fraction >= 0.0 && config.bad_fraction <= 1.0)) {
    fail(ErrorKind::Config, "bad fraction must lie in [0,1]");
  }
  if (!(config.time_span > 0.0)) fail(ErrorKind::Config, "time span must be positive");
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<bool> bad(config.nodes);
  std::vector<double> joined(config.nodes);
  for (std::size_t i = 0; i < config.nodes; ++i) {
    bad[i] = unit(rng) < config.bad_fraction;
    // Half the nodes exist from the start; the rest join over the span.
    joined[i] = unit(rng) < 0.5 ? 0.0 : unit(rng) * config.time_span * 0.95;
  }
  std::vector<std::size_t> order(config.nodes);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return joined[a] < joined[b]; });

  std::vector<double> times(config.edges);
  for (double& t : times) t = unit(rng) * config.time_span;
  std::sort(times.begin(), times.end());

  std::vector<TrustEdge> edges;
  edges.reserve(config.edges);
  std::size_t available = 0;
  for (double t : times) {
    while (available < order.size() && joined[order[available]] <= t) ++available;
    if (available < 2) continue;
    std::uniform_int_distribution<std::size_t> pick(0, available - 1);
    const auto u = static_cast<NodeId>(order[pick(rng)]);
    auto v = static_cast<NodeId>(order[pick(rng)]);
    if (u == v) continue;
    bool trust = !bad[v];
    if (unit(rng) < config.rating_noise) trust = !trust;
    if (bad[u] && unit(rng) < config.bad_rater_flip) trust = !trust;
    edges.push_back({u, v, trust ? Level{1} : Level{0}, t});
  }
  return make_graph(TrustLevelScheme::bitcoin(), std::move(edges), config.nodes);
}

void write_edge_list(const std::filesystem::path& path, const DynamicGraph& graph) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Data, "cannot write " + path.string());
  out.precision(17);
  for (const auto& e : graph.edges) {
    out << e.source << ',' << e.target << ',' << (e.level == graph.scheme.max_trust_level() ? 5 : -5) << ','
        << e.timestamp << '\n';
  }
  if (!out) fail(ErrorKind::Data, "failed writing " + path.string());
}

}  // namespace trustguard
