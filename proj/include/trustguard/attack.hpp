#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustguard/graph.hpp"

namespace trustguard {

enum class AttackKind { BadMouthing, GoodMouthing, OnOff };

std::string attack_name(AttackKind kind);
// "bad", "good", "onoff".
AttackKind parse_attack(const std::string& name);

struct AttackSpec {
  AttackKind kind = AttackKind::BadMouthing;
  // Share of Good candidates attacked (bad-mouthing, on-off). Good-mouthing
  // always targets every Bad candidate.
  double target_fraction = 0.1;
  // Injected edges per target and phase (test, poisoned training); nullopt = the target's
  // degree over the training snapshots (at least 1).
  std::optional<std::size_t> edges_per_target;
  // On-off: number of attacker nodes. Unused by the collaborative attacks,
  // whose group size equals edges_per_target.
  std::size_t attacker_pool = 10;
  // The attacker group also rates the target once each inside its active
  // training snapshots (one snapshot per attacker, seeded).
  bool poison_training = true;
  // Attackers are new nodes with ids from the current node count upward;
  // otherwise they are drawn from existing Bad nodes.
  bool fresh_attackers = true;
  std::uint64_t seed = 1;

  void validate() const;
};

// Which snapshot indices play the training and test roles.
struct AttackScope {
  std::vector<std::size_t> training;
  std::vector<std::size_t> test;

  // Training = all but the last `test_count`, test = the rest.
  static AttackScope split(std::size_t snapshot_count, std::size_t test_count = 1);
};

struct InjectedEdge {
  std::size_t snapshot = 0;
  TrustEdge edge;
  bool malicious = true;

  bool operator==(const InjectedEdge&) const = default;
};

struct InjectionReport {
  AttackKind kind = AttackKind::BadMouthing;
  std::vector<NodeId> targets;
  std::vector<NodeId> attackers;
  std::vector<InjectedEdge> edges;
  std::map<NodeId, std::size_t> edges_per_target;
  std::vector<std::size_t> affected_snapshots;

  std::vector<std::size_t> injected_per_snapshot(std::size_t snapshot_count) const;
  std::vector<std::size_t> malicious_per_snapshot(std::size_t snapshot_count) const;
  std::vector<TrustEdge> malicious_edges() const;
  bool operator==(const InjectionReport&) const = default;
};

struct AttackOutcome {
  std::vector<Snapshot> snapshots;
  std::size_t node_count = 0;
  InjectionReport report;
};

// Collaborative bad-mouthing: Distrust edges onto seeded Good targets.
AttackOutcome inject_bad_mouthing(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                                  const TrustLevelScheme& scheme, const LabelIndex& labels,
                                  const AttackSpec& spec, const AttackScope& scope);
// Collaborative good-mouthing: Trust edges onto every Bad target.
AttackOutcome inject_good_mouthing(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                                   const TrustLevelScheme& scheme, const LabelIndex& labels,
                                   const AttackSpec& spec, const AttackScope& scope);
// Attackers defame the targets at odd 1-indexed timeslots of the scope and rate
// them honestly at even ones.
AttackOutcome inject_on_off(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                            const TrustLevelScheme& scheme, const LabelIndex& labels, const AttackSpec& spec,
                            const AttackScope& scope);
AttackOutcome inject_attack(const std::vector<Snapshot>& snapshots, std::size_t node_count,
                            const TrustLevelScheme& scheme, const LabelIndex& labels, const AttackSpec& spec,
                            const AttackScope& scope);

// Delimited records: snapshot,source,target,level,timestamp,malicious.
void write_injection_report(std::ostream& out, const InjectionReport& report);

}  // namespace trustguard
