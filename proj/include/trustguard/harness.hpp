#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trustguard/attack.hpp"
#include "trustguard/graph.hpp"
#include "trustguard/metrics.hpp"
#include "trustguard/model.hpp"

namespace trustguard {

enum class TaskKind { SingleObserved, MultiObserved, SingleUnobserved };
enum class Segmentation { TimeDriven, EventDriven };

std::string task_name(TaskKind kind);  // single, multi, unobserved
TaskKind parse_task(const std::string& name);
std::string segmentation_name(Segmentation s);  // time, event
Segmentation parse_segmentation(const std::string& name);

struct TaskSpec {
  TaskKind kind = TaskKind::SingleObserved;
  // Number of leading time windows used for training, one subtask each.
  // Empty: every admissible value (2..n-1, or 2..n-horizon for MultiObserved).
  std::vector<std::size_t> train_upto;
  std::size_t horizon = 3;
  Segmentation segmentation = Segmentation::TimeDriven;
  std::size_t snapshot_count = 10;
  // Event-driven only: how many equal-count snapshots the training edges are
  // re-split into; defaults to the number of training windows.
  std::optional<std::size_t> event_snapshot_count;
  std::optional<AttackSpec> attack;
  Variant variant = Variant::Full;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const;
  std::vector<std::size_t> subtasks() const;
};

// One train/test split. Training edges may include injected attack edges; test
// edges are always original edges of the graph.
struct Split {
  std::size_t train_upto = 0;
  std::vector<Snapshot> training;
  std::vector<TrustEdge> test;
  std::size_t node_count = 0;
  std::size_t level_count = 2;
  Level positive_level = 1;  // scores for binary AUC
  std::optional<InjectionReport> injection;
  std::uint64_t hash = 0;  // over training edges in order, then test edges
};

// Mean trustee-role robust coefficient (averaged over layers) of injected
// malicious edges and of the original edges pointing at the same targets.
struct CoefficientStats {
  double malicious_mean = 0.0;
  std::size_t malicious_count = 0;
  double benign_mean = 0.0;
  std::size_t benign_count = 0;
};

struct SubtaskResult {
  std::size_t train_upto = 0;
  std::uint64_t seed = 0;
  bool skipped = false;
  std::string note;
  MetricValues values;
  ConfusionMatrix confusion;
  std::size_t test_edges = 0;
  std::uint64_t split_hash = 0;
  std::size_t epochs = 0;
  std::optional<CoefficientStats> coefficients;
};

struct MetricReport {
  TaskSpec spec;
  std::vector<SubtaskResult> runs;     // seed-major, then subtask order
  std::vector<MetricValues> per_seed;  // uniform mean over the seed's non-skipped subtasks
  MetricValues mean;
  MetricValues stddev;  // sample standard deviation over seeds
  ConfusionMatrix confusion;
  std::size_t skipped = 0;
  std::optional<CoefficientStats> coefficients;  // pooled over runs

  // Combined over every run; equal for runs on identical splits.
  std::uint64_t split_hash() const;
  // Per-seed MCC values, for paired comparisons.
  std::vector<double> seed_mcc() const;
};

struct HarnessOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Labels used for attack targeting (Good iff positive incident ratings win).
LabelIndex graph_labels(const DynamicGraph& graph);

Split prepare_split(const DynamicGraph& graph, const std::vector<Snapshot>& windows, const LabelIndex& labels,
                    const TaskSpec& spec, std::size_t train_upto, std::uint64_t seed);

struct SingleRun {
  Split split;
  TrainResult training;
  SubtaskResult result;
};

// Trains on the split and scores the test edges. `config.seed` is replaced by
// `seed`, and the variant is applied to `config.model`.
SingleRun run_single(const Split& split, const TaskSpec& spec, TrainConfig config, std::uint64_t seed);

MetricReport run_task(const DynamicGraph& graph, const TaskSpec& spec, const TrainConfig& config,
                      const HarnessOptions& options = {});

struct AblationRow {
  Variant variant;
  MetricReport report;
};

std::vector<AblationRow> run_ablation(const DynamicGraph& graph, const TaskSpec& base,
                                      const std::vector<Variant>& variants, const TrainConfig& config,
                                      const HarnessOptions& options = {});

enum class SweepParameter { PropagationLength, Heads, PruneThreshold, SnapshotCount };

std::string sweep_name(SweepParameter p);  // layers, heads, threshold, snapshots
SweepParameter parse_sweep(const std::string& name);

struct SweepPoint {
  double value = 0.0;
  MetricReport report;
};

// Layer schedules for propagation length L: 32, 32-32, 32-64-32, 32-64-64-32.
std::vector<std::size_t> layer_schedule(std::size_t length);

std::vector<SweepPoint> sensitivity_sweep(const DynamicGraph& graph, SweepParameter parameter,
                                          const std::vector<double>& values, const TaskSpec& base,
                                          const TrainConfig& config, const HarnessOptions& options = {});

}  // namespace trustguard
