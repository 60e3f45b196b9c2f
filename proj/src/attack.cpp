#include "trustguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include "trustguard/error.hpp"

namespace trustguard {

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::BadMouthing: return "bad";
    case AttackKind::GoodMouthing: return "good";
    case AttackKind::OnOff: return "onoff";
  }
  return "?";
}

AttackKind parse_attack(const std::string& name) {
  for (auto k : {AttackKind::BadMouthing, AttackKind::GoodMouthing, AttackKind::OnOff}) {
    if (attack_name(k) == name) return k;
  }
  fail(ErrorKind::Config, "unknown attack '" + name + "' (expected bad, good or onoff)");
}

void AttackSpec::validate() const {
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    fail(ErrorKind::Config, "attack target fraction must lie in (0,1]");
  }
  if (edges_per_target && *edges_per_target == 0) fail(ErrorKind::Config, "edges per target must be >= 1");
}

AttackScope AttackScope::split(std::size_t snapshot_count, std::size_t test_count) {
  if (test_count == 0 || test_count > snapshot_count) fail(ErrorKind::Config, "attack scope: bad test count");
  AttackScope s;
  for (std::size_t i = 0; i < snapshot_count; ++i) (i + test_count < snapshot_count ? s.training : s.test).push_back(i);
  return s;
}

std::vector<std::size_t> InjectionReport::injected_per_snapshot(std::size_t snapshot_count) const {
  std::vector<std::size_t> n(snapshot_count, 0);
  for (const auto& e : edges) ++n.at(e.snapshot);
  return n;
}

std::vector<std::size_t> InjectionReport::malicious_per_snapshot(std::size_t snapshot_count) const {
  std::vector<std::size_t> n(snapshot_count, 0);
  for (const auto& e : edges) n.at(e.snapshot) += e.malicious;
  return n;
}

std::vector<TrustEdge> InjectionReport::malicious_edges() const {
  std::vector<TrustEdge> out;
  for (const auto& e : edges)
    if (e.malicious) out.push_back(e.edge);
  return out;
}

namespace {

void check_scope(const std::vector<Snapshot>& snapshots, const AttackScope& scope) {
  for (auto idx : {&scope.training, &scope.test}) {
    for (std::size_t i : *idx) {
      if (i >= snapshots.size()) fail(ErrorKind::Config, "attack scope names a snapshot that does not exist");
    }
  }
  if (scope.test.empty()) fail(ErrorKind::Config, "attack scope has no test snapshot");
}

// Nodes with `wanted` label present in a test snapshot and, when there is
// training data, in at least one training snapshot.
std::vector<NodeId> candidates(const std::vector<Snapshot>& snapshots, const LabelIndex& labels,
                               NodeClass wanted, const AttackScope& scope) {
  std::set<NodeId> test_nodes, train_nodes;
  for (std::size_t i : scope.test)
    for (NodeId n : snapshots[i].nodes()) test_nodes.insert(n);
  for (std::size_t i : scope.training)
    for (NodeId n : snapshots[i].nodes()) train_nodes.insert(n);
  std::vector<NodeId> out;
  for (NodeId n : test_nodes) {
    if (labels[n] != wanted) continue;
    if (!scope.training.empty() && !train_nodes.contains(n)) continue;
    out.push_back(n);
  }
  return out;
}

std::vector<NodeId> select_targets(std::vector<NodeId> pool, double fraction, std::mt19937_64& rng) {
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pool.size()) - 1e-9));
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min(std::max<std::size_t>(count, 1), pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::size_t training_degree(const std::vector<Snapshot>& snapshots, const AttackScope& scope, NodeId node) {
  std::size_t d = 0;
  for (std::size_t i : scope.training) {
    for (const auto& e : snapshots[i].edges()) {
      if (e.source == e.target) continue;
      d += (e.source == node) + (e.target == node);
    }
  }
  return d;
}

double draw_time(const Snapshot& s, std::mt19937_64& rng) {
  if (!(s.window_end() > s.window_start())) return s.window_start();
  return std::uniform_real_distribution<double>(s.window_start(), s.window_end())(rng);
}

std::vector<NodeId> existing_attackers(const LabelIndex& labels, std::size_t node_count, NodeId exclude,
                                       std::size_t count, std::mt19937_64& rng) {
  std::vector<NodeId> pool;
  for (NodeId n = 0; n < node_count; ++n)
    if (n != exclude && labels[n] == NodeClass::Bad) pool.push_back(n);
  if (pool.empty()) fail(ErrorKind::Data, "attack: no existing Bad nodes to act as attackers");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<NodeId> out(count);
  for (auto& a : out) a = pool[pick(rng)];
  return out;
}

AttackOutcome rebuild(const std::vector<Snapshot>& snapshots, std::size_t node_count, InjectionReport report) {
  std::vector<std::vector<TrustEdge>> extra(snapshots.size());
  std::set<std::size_t> affected;
  for (const auto& e : report.edges) {
    extra[e.snapshot].push_back(e.edge);
    affected.insert(e.snapshot);
  }
  AttackOutcome out;
  out.node_count = node_count;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const Snapshot& s = snapshots[i];
    if (extra[i].empty()) {
      out.snapshots.push_back(s);
      continue;
    }
    std::vector<TrustEdge> edges = s.edges();
    edges.insert(edges.end(), extra[i].begin(), extra[i].end());
    std::stable_sort(edges.begin(), edges.end(),
                     [](const TrustEdge& a, const TrustEdge& b) { return a.timestamp < b.timestamp; });
    out.snapshots.emplace_back(s.index(), s.window_start(), s.window_end(), s.right_closed(), std::move(edges));
  }
  std::set<NodeId> attackers;
  for (const auto& e : report.edges) attackers.insert(e.edge.source);
  report.attackers.assign(attackers.begin(), attackers.end());
  report.affected_snapshots.assign(affected.begin(), affected.end());
  out.report = std::move(report);
  return out;
}

AttackOutcome collaborative(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                            const TrustLevelScheme& scheme, const LabelIndex& labels, const AttackSpec& spec,
                            const AttackScope& scope, bool defame) {
  spec.validate();
  check_scope(snapshots, scope);
  std::mt19937_64 rng(spec.seed);
  const NodeClass wanted = defame ? NodeClass::Good : NodeClass::Bad;
  auto pool = candidates(snapshots, labels, wanted, scope);
  if (pool.empty()) {
    fail(ErrorKind::Data, std::string("nothing to attack: no ") + (defame ? "Good" : "Bad") +
                              " nodes in the test region");
  }
  const auto targets = defame ? select_targets(std::move(pool), spec.target_fraction, rng) : pool;
  const Level level = scheme.level_for(defame ? Polarity::Negative : Polarity::Positive);

  InjectionReport report;
  report.kind = defame ? AttackKind::BadMouthing : AttackKind::GoodMouthing;
  report.targets = targets;
  auto next_id = static_cast<NodeId>(node_count);
  for (NodeId target : targets) {
    const std::size_t k = spec.edges_per_target.value_or(std::max<std::size_t>(training_degree(snapshots, scope, target), 1));
    report.edges_per_target[target] = k;
    std::vector<NodeId> group;
    if (spec.fresh_attackers) {
      for (std::size_t a = 0; a < k; ++a) group.push_back(next_id++);
    } else {
      group = existing_attackers(labels, node_count, target, k, rng);
    }
    auto emit = [&](std::size_t snap, NodeId a) {
      report.edges.push_back({snap, {a, target, level, draw_time(snapshots[snap], rng)}, true});
    };
    for (std::size_t i : scope.test)
      if (snapshots[i].contains(target))
        for (NodeId a : group) emit(i, a);
    if (spec.poison_training) {
      // The same group rates the target once each, spread over its active training windows.
      std::vector<std::size_t> active;
      for (std::size_t i : scope.training)
        if (snapshots[i].contains(target)) active.push_back(i);
      if (!active.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
        for (NodeId a : group) emit(active[pick(rng)], a);
      }
    }
  }
  return rebuild(snapshots, spec.fresh_attackers ? next_id : node_count, std::move(report));
}

}  // namespace

AttackOutcome inject_bad_mouthing(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                                  const TrustLevelScheme& scheme, const LabelIndex& labels,
                                  const AttackSpec& spec, const AttackScope& scope) {
  return collaborative(snapshots, node_count, scheme, labels, spec, scope, true);
}

AttackOutcome inject_good_mouthing(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                                   const TrustLevelScheme& scheme, const LabelIndex& labels,
                                   const AttackSpec& spec, const AttackScope& scope) {
  return collaborative(snapshots, node_count, scheme, labels, spec, scope, false);
}

AttackOutcome inject_on_off(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                            const TrustLevelScheme& scheme, const LabelIndex& labels, const AttackSpec& spec,
                            const AttackScope& scope) {
  spec.validate();
  check_scope(snapshots, scope);
  std::vector<std::size_t> slots = scope.training;
  slots.insert(slots.end(), scope.test.begin(), scope.test.end());
  std::sort(slots.begin(), slots.end());
  slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
  if (slots.size() < 2) fail(ErrorKind::Config, "on-off attack needs at least 2 snapshots");
  InjectionReport report;
  report.kind = AttackKind::OnOff;
  if (spec.attacker_pool == 0) return rebuild(snapshots, node_count, std::move(report));

  std::mt19937_64 rng(spec.seed);
  auto pool = candidates(snapshots, labels, NodeClass::Good, scope);
  if (pool.empty()) fail(ErrorKind::Data, "nothing to attack: no Good nodes in the test region");
  report.targets = select_targets(std::move(pool), spec.target_fraction, rng);
  std::vector<NodeId> attackers;
  if (spec.fresh_attackers) {
    for (std::size_t a = 0; a < spec.attacker_pool; ++a) attackers.push_back(static_cast<NodeId>(node_count + a));
  } else {
    attackers = existing_attackers(labels, node_count, static_cast<NodeId>(node_count), spec.attacker_pool, rng);
  }
  const Level bad = scheme.level_for(Polarity::Negative);
  for (std::size_t slot = 0; slot < slots.size(); ++slot) {
    const bool malicious = slot % 2 == 0;  // 1-indexed odd slots
    const std::size_t snap = slots[slot];
    for (NodeId target : report.targets) {
      const Level honest = scheme.level_for(labels[target] == NodeClass::Good ? Polarity::Positive : Polarity::Negative);
      for (NodeId a : attackers) {
        if (a == target) continue;
        report.edges.push_back({snap, {a, target, malicious ? bad : honest, draw_time(snapshots[snap], rng)}, malicious});
      }
    }
  }
  for (NodeId target : report.targets) report.edges_per_target[target] = attackers.size();
  return rebuild(snapshots, spec.fresh_attackers ? node_count + spec.attacker_pool : node_count, std::move(report));
}

AttackOutcome inject_attack(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                            const TrustLevelScheme& scheme, const LabelIndex& labels, const AttackSpec& spec,
                            const AttackScope& scope) {
  switch (spec.kind) {
    case AttackKind::BadMouthing: return inject_bad_mouthing(snapshots, node_count, scheme, labels, spec, scope);
    case AttackKind::GoodMouthing: return inject_good_mouthing(snapshots, node_count, scheme, labels, spec, scope);
    case AttackKind::OnOff: return inject_on_off(snapshots, node_count, scheme, labels, spec, scope);
  }
  fail(ErrorKind::Config, "unknown attack kind");
}

void write_injection_report(std::ostream& out, const InjectionReport& report) {
  out << "snapshot,source,target,level,timestamp,malicious\n";
  out.precision(17);
  for (const auto& e : report.edges) {
    out << e.snapshot << ',' << e.edge.source << ',' << e.edge.target << ',' << e.edge.level << ','
        << e.edge.timestamp << ',' << (e.malicious ? 1 : 0) << '\n';
  }
}

}  // namespace trustguard
