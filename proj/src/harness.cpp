#include "trustguard/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <set>
#include <thread>
#include <tuple>

#include "trustguard/error.hpp"
#include "trustguard/log.hpp"

namespace trustguard {

std::string task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::SingleObserved: return "single";
    case TaskKind::MultiObserved: return "multi";
    case TaskKind::SingleUnobserved: return "unobserved";
  }
  return "?";
}

TaskKind parse_task(const std::string& name) {
  for (auto k : {TaskKind::SingleObserved, TaskKind::MultiObserved, TaskKind::SingleUnobserved}) {
    if (task_name(k) == name) return k;
  }
  fail(ErrorKind::Config, "unknown task '" + name + "' (expected single, multi or unobserved)");
}

std::string segmentation_name(Segmentation s) { return s == Segmentation::TimeDriven ? "time" : "event"; }

Segmentation parse_segmentation(const std::string& name) {
  if (name == "time") return Segmentation::TimeDriven;
  if (name == "event") return Segmentation::EventDriven;
  fail(ErrorKind::Config, "unknown segmentation '" + name + "' (expected time or event)");
}

void TaskSpec::validate() const {
  const std::size_t n = snapshot_count;
  if (n < 3) fail(ErrorKind::Config, "task needs at least 3 snapshots, got " + std::to_string(n));
  if (kind == TaskKind::MultiObserved && horizon == 0) fail(ErrorKind::Config, "horizon must be >= 1");
  if (kind == TaskKind::MultiObserved && horizon + 2 > n) {
    fail(ErrorKind::Config, "horizon " + std::to_string(horizon) + " leaves no training window");
  }
  for (std::size_t t : train_upto) {
    const std::size_t last = kind == TaskKind::MultiObserved ? n - horizon : n - 1;
    if (t < 2 || t > last) {
      fail(ErrorKind::Config, "train_upto " + std::to_string(t) + " outside [2, " + std::to_string(last) + "]");
    }
  }
  if (event_snapshot_count && *event_snapshot_count == 0) {
    fail(ErrorKind::Config, "event snapshot count must be >= 1");
  }
  if (seeds.empty()) fail(ErrorKind::Config, "at least one seed is required");
  if (attack) attack->validate();
}

std::vector<std::size_t> TaskSpec::subtasks() const {
  if (!train_upto.empty()) return train_upto;
  const std::size_t last = kind == TaskKind::MultiObserved ? snapshot_count - horizon : snapshot_count - 1;
  std::vector<std::size_t> out;
  for (std::size_t t = 2; t <= last; ++t) out.push_back(t);
  return out;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= kFnvPrime;
  }
}

void fnv_edge(std::uint64_t& h, const TrustEdge& e) {
  fnv(h, e.source);
  fnv(h, e.target);
  fnv(h, e.level);
  fnv(h, std::bit_cast<std::uint64_t>(e.timestamp));
}

using EdgeKey = std::tuple<NodeId, NodeId, Level, double>;

EdgeKey key(const TrustEdge& e) { return {e.source, e.target, e.level, e.timestamp}; }

MetricValues average(const std::vector<MetricValues>& v) {
  MetricValues m;
  for (const auto& x : v) {
    m.mcc += x.mcc;
    m.auc += x.auc;
    m.ba += x.ba;
    m.f1 += x.f1;
  }
  const double n = static_cast<double>(std::max<std::size_t>(v.size(), 1));
  return {m.mcc / n, m.auc / n, m.ba / n, m.f1 / n};
}

MetricValues sample_stddev(const std::vector<MetricValues>& v, const MetricValues& mean) {
  if (v.size() < 2) return {};
  MetricValues s;
  for (const auto& x : v) {
    s.mcc += (x.mcc - mean.mcc) * (x.mcc - mean.mcc);
    s.auc += (x.auc - mean.auc) * (x.auc - mean.auc);
    s.ba += (x.ba - mean.ba) * (x.ba - mean.ba);
    s.f1 += (x.f1 - mean.f1) * (x.f1 - mean.f1);
  }
  const double d = static_cast<double>(v.size() - 1);
  return {std::sqrt(s.mcc / d), std::sqrt(s.auc / d), std::sqrt(s.ba / d), std::sqrt(s.f1 / d)};
}

std::uint64_t attack_seed(std::uint64_t base, std::uint64_t run_seed) {
  return base ^ (run_seed * 0x9e3779b97f4a7c15ULL);
}

std::optional<CoefficientStats> coefficient_stats(const Split& split, const TrainResult& tr) {
  if (!split.injection) return std::nullopt;
  std::set<EdgeKey> malicious, injected;
  for (const auto& e : split.injection->edges) {
    injected.insert(key(e.edge));
    if (e.malicious) malicious.insert(key(e.edge));
  }
  const std::set<NodeId> targets(split.injection->targets.begin(), split.injection->targets.end());
  CoefficientStats s;
  double mal = 0.0, ben = 0.0;
  for (std::size_t p = 0; p < tr.plans.size() && p < tr.coefficients.size(); ++p) {
    const auto& plan = tr.plans[p];
    const auto& layers = tr.coefficients[p].coefficients;
    if (layers.empty() || layers[0][0].size() != plan.edges.size()) continue;
    for (std::size_t e = 0; e < plan.edges.size(); ++e) {
      double c = 0.0;
      for (const auto& l : layers) c += l[static_cast<std::size_t>(Role::Trustee)][e];
      c /= static_cast<double>(layers.size());
      const auto k = key(plan.edges[e]);
      if (malicious.contains(k)) {
        mal += c;
        ++s.malicious_count;
      } else if (!injected.contains(k) && targets.contains(plan.edges[e].target)) {
        ben += c;
        ++s.benign_count;
      }
    }
  }
  if (s.malicious_count) s.malicious_mean = mal / static_cast<double>(s.malicious_count);
  if (s.benign_count) s.benign_mean = ben / static_cast<double>(s.benign_count);
  return s;
}

// Runs jobs [0, count) on a pool; the first exception is rethrown after join.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::uint64_t MetricReport::split_hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& r : runs) fnv(h, r.split_hash);
  return h;
}

std::vector<double> MetricReport::seed_mcc() const {
  std::vector<double> out;
  for (const auto& v : per_seed) out.push_back(v.mcc);
  return out;
}

LabelIndex graph_labels(const DynamicGraph& graph) { return LabelIndex(label_nodes(graph.edges, graph.scheme)); }

Split prepare_split(const DynamicGraph& graph, const std::vector<Snapshot>& windows, const LabelIndex& labels,
                    const TaskSpec& spec, std::size_t t, std::uint64_t seed) {
  if (windows.size() != spec.snapshot_count) {
    fail(ErrorKind::Config, "expected " + std::to_string(spec.snapshot_count) + " windows, got " +
                                std::to_string(windows.size()));
  }
  std::vector<std::size_t> test_idx{t};
  if (spec.kind == TaskKind::MultiObserved) {
    test_idx.clear();
    for (std::size_t i = t; i < t + spec.horizon; ++i) test_idx.push_back(i);
  }
  if (t < 2 || test_idx.back() >= windows.size()) fail(ErrorKind::Config, "train_upto out of range");

  Split split;
  split.train_upto = t;
  split.node_count = graph.node_count;
  split.level_count = graph.scheme.cardinality();
  split.positive_level = graph.scheme.max_trust_level();
  std::vector<Snapshot> source = windows;
  if (spec.attack) {
    AttackSpec a = *spec.attack;
    a.seed = attack_seed(a.seed, seed);
    AttackScope scope;
    for (std::size_t i = 0; i < t; ++i) scope.training.push_back(i);
    scope.test = test_idx;
    auto outcome = inject_attack(windows, graph.node_count, graph.scheme, labels, a, scope);
    source = std::move(outcome.snapshots);
    split.node_count = outcome.node_count;
    split.injection = std::move(outcome.report);
  }
  source.resize(t);

  std::vector<TrustEdge> train_edges;
  for (const auto& s : source) train_edges.insert(train_edges.end(), s.edges().begin(), s.edges().end());
  if (spec.variant == Variant::StaticMean) {
    split.training.emplace_back(0, source.front().window_start(), source.back().window_end(),
                                source.back().right_closed(), train_edges);
  } else if (spec.segmentation == Segmentation::EventDriven) {
    split.training = segment_event_driven(train_edges, spec.event_snapshot_count.value_or(t));
  } else {
    split.training = std::move(source);
  }

  std::vector<std::uint8_t> observed(graph.node_count, 0);
  for (std::size_t i = 0; i < t; ++i)
    for (NodeId n : windows[i].nodes()) observed[n] = 1;
  for (std::size_t i : test_idx) {
    for (const auto& e : windows[i].edges()) {
      if (e.source == e.target) continue;
      const bool both = observed[e.source] && observed[e.target];
      if ((spec.kind == TaskKind::SingleUnobserved) != both) split.test.push_back(e);
    }
  }

  std::uint64_t h = kFnvOffset;
  for (const auto& e : train_edges) fnv_edge(h, e);
  fnv(h, ~0ULL);
  for (const auto& e : split.test) fnv_edge(h, e);
  split.hash = h;
  return split;
}

SingleRun run_single(const Split& split, const TaskSpec& spec, TrainConfig config, std::uint64_t seed) {
  const std::size_t level_count = split.level_count;
  config.seed = seed;
  apply_variant(config.model, spec.variant);
  config.validate();
  config.model.validate();

  SingleRun run;
  run.split = split;
  auto& r = run.result;
  r.train_upto = split.train_upto;
  r.seed = seed;
  r.split_hash = split.hash;
  r.confusion = ConfusionMatrix(level_count);
  r.test_edges = split.test.size();

  const Tensor h0 = initial_embeddings(split.node_count, config.model.spatial.input_dim, seed);
  run.training = train(split.training, h0, level_count, config);
  r.epochs = run.training.history.size();
  r.coefficients = coefficient_stats(split, run.training);

  const std::string where = "t=" + std::to_string(split.train_upto) + " seed=" + std::to_string(seed);
  if (split.test.empty()) {
    r.skipped = true;
    r.note = "empty test set";
    log_warning("subtask " + where + " skipped: empty test set");
    return run;
  }
  std::vector<Level> truths;
  for (const auto& e : split.test) truths.push_back(e.level);
  std::set<Level> classes(truths.begin(), truths.end());
  if (classes.size() < 2) {
    r.skipped = true;
    r.note = "single-class test set";
    log_warning("subtask " + where + " skipped: test set has a single class");
    return run;
  }
  std::vector<double> probs;
  {
    NoGradGuard guard;
    const Tensor h = run.training.model.embed(run.training.plans);
    const Tensor p = predict_probabilities(h, split.test, run.training.model.params, run.training.model.config);
    probs.assign(p.values().begin(), p.values().end());
  }
  auto ev = evaluate_predictions(probs, truths, level_count, split.positive_level);
  r.values = ev.values;
  r.confusion = std::move(ev.confusion);
  return run;
}

MetricReport run_task(const DynamicGraph& graph, const TaskSpec& spec, const TrainConfig& config,
                      const HarnessOptions& options) {
  spec.validate();
  config.validate();
  const auto windows = segment_time_driven(graph, spec.snapshot_count);
  const LabelIndex labels = spec.attack ? graph_labels(graph) : LabelIndex{};
  const auto subtasks = spec.subtasks();
  const std::size_t per_seed = subtasks.size();
  const std::size_t levels = graph.scheme.cardinality();

  MetricReport report;
  report.spec = spec;
  report.runs.resize(spec.seeds.size() * per_seed);
  parallel_for(report.runs.size(), options.threads, [&](std::size_t job) {
    const std::uint64_t seed = spec.seeds[job / per_seed];
    const std::size_t t = subtasks[job % per_seed];
    const Split split = prepare_split(graph, windows, labels, spec, t, seed);
    report.runs[job] = run_single(split, spec, config, seed).result;
  });

  report.confusion = ConfusionMatrix(levels);
  CoefficientStats pooled;
  bool any_coeff = false;
  for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
    std::vector<MetricValues> vals;
    for (std::size_t k = 0; k < per_seed; ++k) {
      const auto& r = report.runs[s * per_seed + k];
      if (r.coefficients) {
        any_coeff = true;
        pooled.malicious_mean += r.coefficients->malicious_mean * static_cast<double>(r.coefficients->malicious_count);
        pooled.malicious_count += r.coefficients->malicious_count;
        pooled.benign_mean += r.coefficients->benign_mean * static_cast<double>(r.coefficients->benign_count);
        pooled.benign_count += r.coefficients->benign_count;
      }
      if (r.skipped) {
        ++report.skipped;
        continue;
      }
      vals.push_back(r.values);
      report.confusion.merge(r.confusion);
    }
    if (vals.empty()) {
      fail(ErrorKind::Data, "seed " + std::to_string(spec.seeds[s]) + ": every subtask was skipped");
    }
    report.per_seed.push_back(average(vals));
  }
  if (any_coeff) {
    if (pooled.malicious_count) pooled.malicious_mean /= static_cast<double>(pooled.malicious_count);
    if (pooled.benign_count) pooled.benign_mean /= static_cast<double>(pooled.benign_count);
    report.coefficients = pooled;
  }
  report.mean = average(report.per_seed);
  report.stddev = sample_stddev(report.per_seed, report.mean);
  return report;
}

std::vector<AblationRow> run_ablation(const DynamicGraph& graph, const TaskSpec& base,
                                      const std::vector<Variant>& variants, const TrainConfig& config,
                                      const HarnessOptions& options) {
  std::vector<AblationRow> rows;
  for (Variant v : variants) {
    TaskSpec spec = base;
    spec.variant = v;
    rows.push_back({v, run_task(graph, spec, config, options)});
  }
  return rows;
}

std::string sweep_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::PropagationLength: return "layers";
    case SweepParameter::Heads: return "heads";
    case SweepParameter::PruneThreshold: return "threshold";
    case SweepParameter::SnapshotCount: return "snapshots";
  }
  return "?";
}

SweepParameter parse_sweep(const std::string& name) {
  for (auto p : {SweepParameter::PropagationLength, SweepParameter::Heads, SweepParameter::PruneThreshold,
                 SweepParameter::SnapshotCount}) {
    if (sweep_name(p) == name) return p;
  }
  fail(ErrorKind::Config, "unknown sweep parameter '" + name + "' (expected layers, heads, threshold or snapshots)");
}

std::vector<std::size_t> layer_schedule(std::size_t length) {
  if (length == 0) fail(ErrorKind::Config, "propagation length must be >= 1");
  if (length == 1) return {32};
  std::vector<std::size_t> dims(length, 64);
  dims.front() = 32;
  dims.back() = 32;
  return dims;
}

std::vector<SweepPoint> sensitivity_sweep(const DynamicGraph& graph, SweepParameter parameter,
                                          const std::vector<double>& values, const TaskSpec& base,
                                          const TrainConfig& config, const HarnessOptions& options) {
  std::vector<SweepPoint> out;
  for (double v : values) {
    TaskSpec spec = base;
    TrainConfig cfg = config;
    auto whole = [&](const char* what) {
      if (!(v >= 1.0) || v != std::floor(v)) {
        fail(ErrorKind::Config, std::string(what) + " values must be positive integers");
      }
      return static_cast<std::size_t>(v);
    };
    switch (parameter) {
      case SweepParameter::PropagationLength:
        cfg.model.spatial.layer_dims = layer_schedule(whole("propagation length"));
        cfg.model.temporal.dim = cfg.model.spatial.output_dim();
        break;
      case SweepParameter::Heads: cfg.model.temporal.heads = whole("head"); break;
      case SweepParameter::PruneThreshold: cfg.model.spatial.prune_threshold = v; break;
      case SweepParameter::SnapshotCount:
        spec.snapshot_count = whole("snapshot count");
        spec.train_upto.clear();
        break;
    }
    cfg.model.validate();
    out.push_back({v, run_task(graph, spec, cfg, options)});
  }
  return out;
}

}  // namespace trustguard
