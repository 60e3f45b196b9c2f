#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "trustguard/error.hpp"
#include "trustguard/spatial.hpp"

using namespace trustguard;
using testutil::random_tensor;

namespace {

constexpr Level D = 0;
constexpr Level T = 1;

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

SpatialConfig small_config(std::vector<std::size_t> dims, std::size_t input = 4) {
  SpatialConfig c;
  c.input_dim = input;
  c.layer_dims = std::move(dims);
  return c;
}

// Brute-force robust coefficients for one group: clamped cosine, normalise,
// prune below thr, renormalise, fallback to pre-pruning weights if all pruned.
std::vector<double> oracle_coefficients(const std::vector<std::vector<double>>& neighbors,
                                        const std::vector<double>& self, double thr) {
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
  };
  std::vector<double> s;
  for (const auto& n : neighbors) s.push_back(std::clamp(cosine(self, n), 0.0, 1.0));
  double total = std::accumulate(s.begin(), s.end(), 0.0);
  std::vector<double> norm(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) norm[i] = total > 0 ? s[i] / total : 1.0 / s.size();
  std::vector<double> kept(norm.size());
  double kept_total = 0;
  for (std::size_t i = 0; i < norm.size(); ++i) {
    kept[i] = norm[i] >= thr ? norm[i] : 0.0;
    kept_total += kept[i];
  }
  if (kept_total == 0) return norm;
  for (double& k : kept) k /= kept_total;
  return kept;
}

std::vector<double> row_of(const Tensor& t, std::size_t r) {
  return {t.values().begin() + r * t.cols(), t.values().begin() + (r + 1) * t.cols()};
}

std::vector<TrustEdge> random_edges(std::mt19937_64& rng, std::size_t count, NodeId nodes) {
  std::uniform_int_distribution<NodeId> node(0, nodes - 1);
  std::bernoulli_distribution pos(0.8);
  std::vector<TrustEdge> out;
  while (out.size() < count) {
    const NodeId a = node(rng), b = node(rng);
    if (a != b) out.push_back({a, b, pos(rng) ? T : D, 0.0});
  }
  return out;
}

}  // namespace

TEST_CASE("embed_rating selects a column of the rating matrix") {
  const Tensor w = Tensor::from(3, 2, {1, 0, 0, 1, 0, 0});
  CHECK(vals(embed_rating(0, w)) == std::vector<double>{1, 0, 0});
  CHECK(vals(embed_rating(1, w)) == std::vector<double>{0, 1, 0});
  CHECK(vals(embed_rating(1, Tensor::zeros(3, 2))) == std::vector<double>{0, 0, 0});
  std::mt19937_64 rng(1);
  const Tensor w4 = random_tensor(5, 4, rng);
  const auto omega = vals(embed_rating(3, w4));
  for (std::size_t i = 0; i < 5; ++i) CHECK(omega[i] == w4.at(i, 3));
  CHECK_THROWS_AS(embed_rating(4, w4), Error);
}

TEST_CASE("build_message concatenates") {
  const Tensor m = build_message(Tensor::from(1, 2, {1, 2}), Tensor::from(1, 2, {3, 4}));
  CHECK(vals(m) == std::vector<double>{1, 2, 3, 4});
  CHECK(vals(build_message(Tensor::zeros(1, 2), Tensor::zeros(1, 2))) == std::vector<double>(4, 0.0));
  CHECK(build_message(Tensor::zeros(1, 32), Tensor::zeros(1, 32)).cols() == 64);
  CHECK_THROWS_AS(build_message(Tensor::zeros(1, 2), Tensor::zeros(1, 3)), Error);
}

TEST_CASE("robust weights prune below the threshold and renormalise") {
  const std::uint32_t group[] = {0, 0};
  const Tensor r = robust_weights(Tensor::from(2, 1, {0.6, 0.4}), group, 1, 0.5);
  CHECK(vals(r) == std::vector<double>{1.0, 0.0});
  // All pruned (three equal shares under thr 0.5): pre-pruning weights.
  const std::uint32_t g3[] = {0, 0, 0};
  const Tensor f = robust_weights(Tensor::from(3, 1, {0.2, 0.2, 0.2}), g3, 1, 0.5);
  for (double v : vals(f)) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("identical neighbour embeddings give uniform coefficients; defense off gives the mean") {
  // node 0 aggregates over neighbours 1..4, all with the same embedding.
  const Tensor h = Tensor::from(5, 2, {1, 0, 2, 1, 2, 1, 2, 1, 2, 1});
  const std::uint32_t self[] = {0, 0, 0, 0};
  const std::uint32_t nb[] = {1, 2, 3, 4};
  for (double v : vals(robust_coefficients(h, self, nb, 5, 0.0, true))) CHECK(v == doctest::Approx(0.25));
  const Tensor h2 = Tensor::from(5, 2, {1, 0, 0, 1, 1, 1, 5, 0, -1, 2});
  CHECK(vals(robust_coefficients(h2, self, nb, 5, 0.5, false)) == std::vector<double>(4, 0.25));
}

TEST_CASE("aggregate_role examples") {
  const Tensor msgs = Tensor::from(2, 2, {1, 2, 3, 6});
  const std::uint32_t one[] = {0};
  const Tensor single = aggregate_role(Tensor::from(1, 2, {1, 2}), Tensor::from(1, 1, {1.0}), one, 1);
  CHECK(vals(single) == std::vector<double>{1, 2});
  const std::uint32_t g[] = {0, 0};
  CHECK(vals(aggregate_role(msgs, Tensor::from(2, 1, {0.5, 0.5}), g, 1)) == std::vector<double>{2, 4});
  CHECK(vals(aggregate_role(msgs, Tensor::from(2, 1, {1.0, 0.0}), g, 1)) == std::vector<double>{1, 2});
  // Node 1 has no neighbours: zero row.
  CHECK(vals(aggregate_role(msgs, Tensor::from(2, 1, {1.0, 0.0}), g, 2)) == std::vector<double>{1, 2, 0, 0});
  CHECK_THROWS_AS(aggregate_role(msgs, Tensor::from(3, 1, {1, 1, 1}), g, 1), Error);
}

TEST_CASE("fuse_roles examples") {
  SpatialLayerParams p{Tensor(), Tensor(), Tensor::zeros(3, 8), Tensor::zeros(1, 3)};
  const Tensor te = Tensor::full(1, 4, 1.0), tr = Tensor::full(1, 4, -2.0);
  CHECK(vals(fuse_roles(te, tr, p)) == std::vector<double>(3, 0.0));
  p.fuse_bias = Tensor::full(1, 3, -1.0);
  CHECK(vals(fuse_roles(te, tr, p)) == std::vector<double>(3, 0.0));
  CHECK_THROWS_AS(fuse_roles(te, Tensor::zeros(1, 3), p), Error);

  ParameterStore store(4);
  const SpatialConfig cfg = small_config({32, 64, 32}, 64);
  init_spatial_params(store, cfg, 2);
  std::mt19937_64 rng(2);
  const auto layer0 = spatial_layer(store, 0);
  CHECK(layer0.fuse_weight.shape() == std::vector<std::size_t>{32, 256});
  CHECK(fuse_roles(random_tensor(1, 128, rng), random_tensor(1, 128, rng), layer0).cols() == 32);
  CHECK(spatial_layer(store, 1).trustee_rating.shape() == std::vector<std::size_t>{32, 2});
  CHECK(carry_projection(store).shape() == std::vector<std::size_t>{32, 64});
}

TEST_CASE("default layer schedule") {
  CHECK(default_layer_dims(1) == std::vector<std::size_t>{32});
  CHECK(default_layer_dims(3) == std::vector<std::size_t>{32, 64, 32});
  CHECK(default_layer_dims(4) == std::vector<std::size_t>{32, 64, 64, 32});
  CHECK_THROWS_AS(default_layer_dims(0), Error);
}

TEST_CASE("spatial_forward on an empty snapshot returns the carried embeddings") {
  const SpatialConfig cfg = small_config({3});
  ParameterStore store(1);
  init_spatial_params(store, cfg, 2);
  std::mt19937_64 rng(3);
  const Tensor h0 = random_tensor(4, 4, rng, 0, 1, false);
  const Tensor carried = matmul_nt(h0, carry_projection(store));
  const auto plan = plan_snapshot(Snapshot(0, 0, 1, true, {}), 4);
  CHECK(vals(spatial_forward(plan, h0, carried, cfg, store)) == vals(carried));
}

TEST_CASE("one edge u->v: only v's trustee branch and u's trustor branch are non-zero") {
  const SpatialConfig cfg = small_config({3});
  ParameterStore store(5);
  init_spatial_params(store, cfg, 2);
  std::mt19937_64 rng(4);
  const Tensor h0 = random_tensor(2, 4, rng, 0.1, 1, false);
  const auto plan = plan_snapshot(Snapshot(0, 0, 1, true, {{0, 1, T, 0}}), 2);
  SpatialTrace trace;
  spatial_forward(plan, h0, Tensor::zeros(2, 3), cfg, store, {false, nullptr, &trace});
  const Tensor& te = trace.role_embeddings[0][0];
  const Tensor& tr = trace.role_embeddings[0][1];
  auto nonzero = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
  };
  CHECK_FALSE(nonzero(row_of(te, 0)));  // u as trustee
  CHECK(nonzero(row_of(te, 1)));        // v as trustee
  CHECK(nonzero(row_of(tr, 0)));        // u as trustor
  CHECK_FALSE(nonzero(row_of(tr, 1)));  // v as trustor
  // Messages carry the neighbour embedding: v's trustee row starts with h0(u).
  for (std::size_t i = 0; i < 4; ++i) CHECK(te.at(1, i) == h0.at(0, i));
  CHECK(trace.coefficients[0][0] == std::vector<double>{1.0});
}

TEST_CASE("permuting node ids permutes output rows") {
  const SpatialConfig cfg = small_config({5, 3});
  ParameterStore store(6);
  init_spatial_params(store, cfg, 2);
  std::mt19937_64 rng(5);
  const NodeId n = 8;
  const auto edges = random_edges(rng, 20, n);
  const Tensor h0 = random_tensor(n, 4, rng, 0, 1, false);
  const Tensor carried = random_tensor(n, 3, rng, 0, 1, false);
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<TrustEdge> pedges = edges;
  for (auto& e : pedges) {
    e.source = perm[e.source];
    e.target = perm[e.target];
  }
  std::vector<std::uint32_t> inverse(n);
  for (NodeId i = 0; i < n; ++i) inverse[perm[i]] = i;
  const Tensor ph0 = gather_rows(h0, inverse);
  const Tensor pcarried = gather_rows(carried, inverse);
  const Tensor out = spatial_forward(plan_snapshot(Snapshot(0, 0, 1, true, edges), n), h0, carried, cfg, store);
  const Tensor pout =
      spatial_forward(plan_snapshot(Snapshot(0, 0, 1, true, pedges), n), ph0, pcarried, cfg, store);
  for (NodeId i = 0; i < n; ++i) {
    const auto a = row_of(out, i), b = row_of(pout, perm[i]);
    for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
  }
}

TEST_CASE("coefficients match a brute-force oracle and form a simplex (property)") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const NodeId n = 10;
    const auto edges = random_edges(rng, 35, n);
    const Tensor h = random_tensor(n, 6, rng, -1, 1, false);
    const double thr = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
    std::vector<std::uint32_t> self, nb;
    for (const auto& e : edges) {
      self.push_back(e.target);
      nb.push_back(e.source);
    }
    const auto r = vals(robust_coefficients(h, self, nb, n, thr, true));
    std::map<std::uint32_t, std::vector<std::size_t>> groups;
    for (std::size_t e = 0; e < self.size(); ++e) groups[self[e]].push_back(e);
    for (const auto& [node, members] : groups) {
      std::vector<std::vector<double>> neighbours;
      for (auto e : members) neighbours.push_back(row_of(h, nb[e]));
      const auto expect = oracle_coefficients(neighbours, row_of(h, node), thr);
      double total = 0;
      for (std::size_t k = 0; k < members.size(); ++k) {
        CHECK(r[members[k]] == doctest::Approx(expect[k]).epsilon(1e-12));
        CHECK(r[members[k]] >= 0.0);
        total += r[members[k]];
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("pruned edges carry exactly zero when a neighbour survives (property)") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t e = 2 + trial % 5;
    const Tensor sim = random_tensor(e, 1, rng, 0.0, 1.0, false);
    const std::vector<std::uint32_t> group(e, 0);
    const double thr = 0.3;
    const auto before = vals(segment_normalize(sim, group, 1));
    const auto after = vals(robust_weights(sim, group, 1, thr));
    const bool any = std::any_of(before.begin(), before.end(), [&](double v) { return v >= thr; });
    for (std::size_t i = 0; i < e; ++i) {
      if (any && before[i] < thr) CHECK(after[i] == 0.0);
      if (!any) CHECK(after[i] == doctest::Approx(before[i]));
    }
  }
}

TEST_CASE("defense off aggregates the arithmetic mean of messages (property)") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const NodeId n = 6;
    const auto edges = random_edges(rng, 12, n);
    std::vector<std::uint32_t> self, nb;
    for (const auto& ed : edges) {
      self.push_back(ed.target);
      nb.push_back(ed.source);
    }
    const Tensor h = random_tensor(n, 3, rng, -1, 1, false);
    const Tensor msgs = random_tensor(edges.size(), 4, rng, -1, 1, false);
    const Tensor agg = aggregate_role(msgs, robust_coefficients(h, self, nb, n, 0.5, false), self, n);
    for (NodeId u = 0; u < n; ++u) {
      std::vector<double> mean(4, 0.0);
      int count = 0;
      for (std::size_t k = 0; k < self.size(); ++k) {
        if (self[k] != u) continue;
        ++count;
        for (std::size_t c = 0; c < 4; ++c) mean[c] += msgs.at(k, c);
      }
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(agg.at(u, c) == doctest::Approx(count ? mean[c] / count : 0.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("edges beyond L hops do not affect a node's embedding") {
  // Path 0-1-2-3-4-5 (alternating directions); deleting the edge 4->5 must not
  // change node 0 when L = 2 (nearest endpoint is 4 hops away).
  const SpatialConfig cfg = small_config({3, 3});
  ParameterStore store(7);
  init_spatial_params(store, cfg, 2);
  std::mt19937_64 rng(14);
  const NodeId n = 6;
  const Tensor h0 = random_tensor(n, 4, rng, 0, 1, false);
  const Tensor carried = Tensor::zeros(n, 3);
  const std::vector<TrustEdge> path = {{0, 1, T, 0}, {2, 1, T, 0}, {2, 3, D, 0}, {4, 3, T, 0}, {4, 5, T, 0}};
  std::vector<TrustEdge> cut(path.begin(), path.end() - 1);
  const Tensor a = spatial_forward(plan_snapshot(Snapshot(0, 0, 1, true, path), n), h0, carried, cfg, store);
  const Tensor b = spatial_forward(plan_snapshot(Snapshot(0, 0, 1, true, cut), n), h0, carried, cfg, store);
  CHECK(row_of(a, 0) == row_of(b, 0));
  CHECK(row_of(a, 1) == row_of(b, 1));
  // Node 4 is adjacent to the deleted edge and does change.
  CHECK(row_of(a, 4) != row_of(b, 4));
}

TEST_CASE("role pipelines are asymmetric") {
  const SpatialConfig cfg = small_config({3});
  ParameterStore store(8);
  init_spatial_params(store, cfg, 2);
  std::mt19937_64 rng(15);
  const Tensor h0 = random_tensor(3, 4, rng, 0.1, 1, false);
  const auto plan = plan_snapshot(Snapshot(0, 0, 1, true, {{0, 1, T, 0}, {1, 2, T, 0}}), 3);
  SpatialTrace trace;
  spatial_forward(plan, h0, Tensor::zeros(3, 3), cfg, store, {false, nullptr, &trace});
  CHECK(row_of(trace.role_embeddings[0][0], 1) != row_of(trace.role_embeddings[0][1], 1));
}

TEST_CASE("self-loops are excluded from aggregation") {
  const auto plan = plan_snapshot(Snapshot(0, 0, 1, true, {{0, 0, T, 0}, {0, 1, T, 0}}), 2);
  CHECK(plan.edges.size() == 1);
  CHECK(plan.active.size() == 2);
}

TEST_CASE("finite-difference gradient through a spatial layer stack") {
  SpatialConfig cfg = small_config({3, 2}, 3);
  cfg.prune_threshold = 0.3;
  ParameterStore store(9);
  init_spatial_params(store, cfg, 2);
  std::mt19937_64 rng(16);
  const NodeId n = 5;
  const auto edges = random_edges(rng, 9, n);
  const auto plan = plan_snapshot(Snapshot(0, 0, 1, true, edges), n);
  const Tensor h0 = random_tensor(n, 3, rng, 0.1, 1, false);
  std::vector<Tensor> inputs;
  std::vector<std::string> names;
  for (const auto& [name, t] : store) {
    inputs.push_back(t);
    names.push_back(name);
  }
  auto f = [&](const std::vector<Tensor>&) {
    const Tensor carried = matmul_nt(h0, carry_projection(store));
    return testutil::weighted_sum(spatial_forward(plan, h0, carried, cfg, store));
  };
  CHECK(testutil::gradcheck(f, inputs) < 1e-4);
}
