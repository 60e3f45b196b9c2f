#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "trustguard/attack.hpp"
#include "trustguard/model.hpp"

namespace trustguard {

struct CoefficientRecord {
  std::size_t snapshot = 0;
  std::size_t layer = 0;
  Role role = Role::Trustee;
  TrustEdge edge;
  double coefficient = 0.0;
  bool malicious = false;
};

struct AttentionTrend {
  std::size_t timeslot = 0;
  double mean_attention = 0.0;  // over heads and observed nodes
  std::size_t interactions = 0;  // edges in the snapshot
};

struct PathStep {
  std::size_t snapshot = 0;
  TrustEdge edge;
  double coefficient = 0.0;  // trustee role, mean over layers
  double attention = 0.0;    // trustee's attention on this timeslot, mean over heads
};

struct ExplanationBundle {
  std::vector<CoefficientRecord> coefficients;
  // Trustee-role coefficients averaged over layers, per edge.
  double malicious_mean = 0.0;
  std::size_t malicious_count = 0;
  double benign_mean = 0.0;
  std::size_t benign_count = 0;
  std::vector<AttentionTrend> attention;
  std::vector<PathStep> path;  // empty when the pair is not within reach
};

// `trained` must carry the final-pass traces (TrainResult::coefficients and
// attention). `injection` marks malicious edges; `query` asks for the edges on
// trustor-trustee paths of at most `hops` undirected hops (default: layer count).
ExplanationBundle export_explanations(const TrainResult& trained, const InjectionReport* injection,
                                      std::optional<std::pair<NodeId, NodeId>> query = std::nullopt,
                                      std::optional<std::size_t> hops = std::nullopt);

void write_coefficient_records(std::ostream& out, const ExplanationBundle& bundle);
void write_attention_trend(std::ostream& out, const ExplanationBundle& bundle);
void write_path(std::ostream& out, const ExplanationBundle& bundle);

}  // namespace trustguard
