#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "trustguard/error.hpp"
#include "trustguard/explain.hpp"
#include "trustguard/log.hpp"
#include "trustguard/report.hpp"
#include "trustguard/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trustguard;
using cli::RunConfig;

namespace {

struct Context {
  std::string command;
  RunConfig config;
  bool defense_explicit = false;
  bool attack_explicit = false;
  fs::path out;
  PlantedGraphConfig synth;
};

std::uint64_t file_fnv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// Output directories appear only once a command has something to write.
std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Data, "cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

void write_manifest(const Context& ctx, const json& extra = json::object()) {
  json m;
  m["command"] = ctx.command;
  m["config"] = ctx.config.to_json();
  if (!ctx.config.dataset.empty()) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(file_fnv(ctx.config.dataset)));
    m["dataset_fnv1a"] = hex;
  }
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_json(ctx.out / "manifest.json", m);
}

DynamicGraph load(const RunConfig& c) {
  if (c.dataset.empty()) fail(ErrorKind::Config, "--dataset is required for this command");
  return load_edge_list(c.dataset, TrustLevelScheme::by_name(c.scheme));
}

json metrics_json(const MetricValues& v) { return {{"mcc", v.mcc}, {"auc", v.auc}, {"ba", v.ba}, {"f1_macro", v.f1}}; }

json report_json(const MetricReport& r) {
  json j;
  j["mean"] = metrics_json(r.mean);
  j["std"] = metrics_json(r.stddev);
  j["per_seed"] = json::array();
  for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
    j["per_seed"].push_back({{"seed", r.spec.seeds[s]}, {"metrics", metrics_json(r.per_seed[s])}});
  }
  j["skipped_subtasks"] = r.skipped;
  json conf = json::array();
  for (Level t = 0; t < r.confusion.classes(); ++t) {
    json row = json::array();
    for (Level p = 0; p < r.confusion.classes(); ++p) row.push_back(r.confusion.at(t, p));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.split_hash()));
  j["split_hash"] = hex;
  if (r.coefficients) {
    j["coefficients"] = {{"malicious_mean", r.coefficients->malicious_mean},
                         {"malicious_count", r.coefficients->malicious_count},
                         {"benign_mean", r.coefficients->benign_mean},
                         {"benign_count", r.coefficients->benign_count}};
  }
  return j;
}

void emit_table(const Context& ctx, const std::vector<ReportRow>& rows, const std::string& name) {
  std::ostringstream table;
  write_metric_table(table, rows);
  open_out(ctx.out / name) << table.str();
  std::cout << table.str();
}

HarnessOptions harness_options(const RunConfig& c) { return {c.threads}; }

int cmd_ingest(Context& ctx) {
  const auto g = load(ctx.config);
  const auto windows = parse_segmentation(ctx.config.segmentation) == Segmentation::TimeDriven
                           ? segment_time_driven(g, ctx.config.snapshots)
                           : segment_event_driven(g, ctx.config.snapshots);
  {
    auto f = open_out(ctx.out / "snapshots.jsonl");
    write_snapshot_manifest(f, windows);
  }
  json levels = json::object();
  for (Level l = 0; l < g.scheme.cardinality(); ++l) levels[g.scheme.level_names[l]] = g.count_level(l);
  const json summary = {{"nodes", g.node_count}, {"edges", g.edges.size()}, {"levels", levels},
                        {"min_timestamp", g.min_timestamp}, {"max_timestamp", g.max_timestamp},
                        {"snapshots", windows.size()}};
  write_json(ctx.out / "summary.json", summary);
  write_manifest(ctx);
  std::cout << "nodes " << g.node_count << ", edges " << g.edges.size() << ", " << windows.size()
            << " snapshots\n";
  return 0;
}

std::size_t single_upto(const RunConfig& c, std::size_t fallback) {
  if (!c.train_upto.empty()) return c.train_upto.front();
  return std::min(fallback, c.snapshots - 1);
}

int cmd_train(Context& ctx) {
  const auto g = load(ctx.config);
  TaskSpec spec = cli::make_task_spec(ctx.config);
  const std::size_t t = single_upto(ctx.config, ctx.config.snapshots - 1);
  spec.train_upto = {t};
  spec.validate();
  const std::uint64_t seed = spec.seeds.front();
  const auto windows = segment_time_driven(g, spec.snapshot_count);
  const LabelIndex labels = spec.attack ? graph_labels(g) : LabelIndex{};
  const Split split = prepare_split(g, windows, labels, spec, t, seed);
  const SingleRun run = run_single(split, spec, cli::make_train_config(ctx.config), seed);
  fs::create_directories(ctx.out);
  save_checkpoint(ctx.out / "checkpoint.txt", run.training.model.params, run.training.history.size());
  {
    auto f = open_out(ctx.out / "history.csv");
    f << "epoch,train_loss,validation_loss,train_accuracy,improved\n";
    f.precision(17);
    for (const auto& e : run.training.history) {
      f << e.epoch << ',' << e.train_loss << ',';
      if (e.validation_loss) f << *e.validation_loss;
      f << ',' << e.train_accuracy << ',' << (e.improved ? 1 : 0) << '\n';
    }
  }
  json result = {{"train_upto", t},
                 {"seed", seed},
                 {"epochs", run.training.history.size()},
                 {"best_epoch", run.training.best_epoch},
                 {"test_edges", run.result.test_edges},
                 {"skipped", run.result.skipped}};
  if (!run.result.skipped) result["test_metrics"] = metrics_json(run.result.values);
  write_json(ctx.out / "result.json", result);
  write_manifest(ctx, {{"train_upto", t}, {"seed", seed}});
  std::cout << "trained on " << t << " snapshots for " << run.training.history.size() << " epochs";
  if (!run.result.skipped) std::cout << "; test MCC " << run.result.values.mcc << ", AUC " << run.result.values.auc;
  std::cout << '\n';
  return 0;
}

int cmd_evaluate(Context& ctx) {
  const auto g = load(ctx.config);
  const TaskSpec spec = cli::make_task_spec(ctx.config);
  const auto report = run_task(g, spec, cli::make_train_config(ctx.config), harness_options(ctx.config));
  emit_table(ctx, {{ctx.config.task, ctx.config.variant, &report}}, "metrics.md");
  {
    auto f = open_out(ctx.out / "runs.csv");
    write_run_records(f, report);
  }
  write_json(ctx.out / "report.json", report_json(report));
  write_manifest(ctx);
  return 0;
}

int cmd_attack(Context& ctx) {
  if (!ctx.attack_explicit || ctx.config.attack == "none") ctx.config.attack = "bad";
  if (ctx.config.train_upto.empty()) ctx.config.train_upto = {std::min<std::size_t>(7, ctx.config.snapshots - 1)};
  ctx.config.validate();
  const auto g = load(ctx.config);
  const TaskSpec spec = cli::make_task_spec(ctx.config);
  std::vector<bool> settings{ctx.config.defense};
  if (!ctx.defense_explicit) settings = {true, false};
  std::vector<MetricReport> reports;
  json out = json::object();
  for (bool d : settings) {
    TrainConfig tc = cli::make_train_config(ctx.config);
    tc.model.spatial.defense_enabled = d;
    reports.push_back(run_task(g, spec, tc, harness_options(ctx.config)));
    const std::string tag = d ? "defense_on" : "defense_off";
    auto f = open_out(ctx.out / ("runs_" + tag + ".csv"));
    write_run_records(f, reports.back());
    out[tag] = report_json(reports.back());
  }
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    rows.push_back({ctx.config.task, ctx.config.variant + (settings[i] ? " (defense on)" : " (defense off)"),
                    &reports[i]});
  }
  emit_table(ctx, rows, "metrics.md");
  // Audit trail of the first seed's first subtask.
  const auto windows = segment_time_driven(g, spec.snapshot_count);
  const Split split = prepare_split(g, windows, graph_labels(g), spec, spec.subtasks().front(), spec.seeds.front());
  {
    auto f = open_out(ctx.out / "injection.csv");
    write_injection_report(f, *split.injection);
  }
  write_json(ctx.out / "report.json", out);
  write_manifest(ctx);
  return 0;
}

int cmd_ablate(Context& ctx) {
  const auto g = load(ctx.config);
  const TaskSpec spec = cli::make_task_spec(ctx.config);
  const std::vector<Variant> variants = {Variant::Full,      Variant::TrustorGuard, Variant::TrusteeGuard,
                                         Variant::GuardMean, Variant::GuardDecay,   Variant::StaticMean};
  const auto rows = run_ablation(g, spec, variants, cli::make_train_config(ctx.config), harness_options(ctx.config));
  std::vector<ReportRow> table;
  json out = json::object();
  for (const auto& r : rows) {
    const std::string name(variant_name(r.variant));
    table.push_back({ctx.config.task, name, &r.report});
    out[name] = report_json(r.report);
    auto f = open_out(ctx.out / ("runs_" + name + ".csv"));
    write_run_records(f, r.report);
  }
  emit_table(ctx, table, "ablation.md");
  write_json(ctx.out / "report.json", out);
  write_manifest(ctx);
  return 0;
}

int cmd_sweep(Context& ctx) {
  const auto g = load(ctx.config);
  const SweepParameter p = parse_sweep(ctx.config.sweep);
  std::vector<double> values = ctx.config.values;
  if (values.empty()) {
    switch (p) {
      case SweepParameter::PropagationLength: values = {1, 2, 3, 4}; break;
      case SweepParameter::Heads: values = {1, 2, 4, 8, 16}; break;
      case SweepParameter::PruneThreshold: values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}; break;
      case SweepParameter::SnapshotCount: values = {8, 10, 12, 14, 16}; break;
    }
  }
  const auto points = sensitivity_sweep(g, p, values, cli::make_task_spec(ctx.config),
                                        cli::make_train_config(ctx.config), harness_options(ctx.config));
  {
    auto f = open_out(ctx.out / "sweep.csv");
    write_sweep_records(f, points);
  }
  PlotSeries mcc{"MCC", {}, {}}, auc{"AUC", {}, {}};
  for (const auto& pt : points) {
    mcc.x.push_back(pt.value);
    mcc.y.push_back(pt.report.mean.mcc);
    auc.x.push_back(pt.value);
    auc.y.push_back(pt.report.mean.auc);
  }
  {
    auto f = open_out(ctx.out / "sweep_mcc.svg");
    write_line_plot_svg(f, "sensitivity: " + sweep_name(p), sweep_name(p), "MCC", std::vector{mcc});
  }
  {
    auto f = open_out(ctx.out / "sweep_auc.svg");
    write_line_plot_svg(f, "sensitivity: " + sweep_name(p), sweep_name(p), "AUC", std::vector{auc});
  }
  write_sweep_records(std::cout, points);
  write_manifest(ctx, {{"values", values}});
  return 0;
}

int cmd_explain(Context& ctx) {
  const auto g = load(ctx.config);
  TaskSpec spec = cli::make_task_spec(ctx.config);
  const std::size_t t = single_upto(ctx.config, 7);
  spec.train_upto = {t};
  spec.validate();
  const std::uint64_t seed = spec.seeds.front();
  const auto windows = segment_time_driven(g, spec.snapshot_count);
  const LabelIndex labels = spec.attack ? graph_labels(g) : LabelIndex{};
  const Split split = prepare_split(g, windows, labels, spec, t, seed);

  std::optional<std::pair<NodeId, NodeId>> query;
  if (ctx.config.query) {
    std::map<std::string, NodeId> dense;
    for (NodeId i = 0; i < g.original_ids.size(); ++i) dense[g.original_ids[i]] = i;
    auto find = [&](const std::string& id) {
      auto it = dense.find(id);
      if (it == dense.end()) fail(ErrorKind::Config, "query node '" + id + "' is not in the dataset");
      return it->second;
    };
    query = std::make_pair(find(ctx.config.query->first), find(ctx.config.query->second));
  }
  const InjectionReport* injection = split.injection ? &*split.injection : nullptr;
  json summary = {{"train_upto", t}, {"seed", seed}};
  std::vector<std::pair<std::string, std::vector<double>>> hist;
  for (bool d : {true, false}) {
    TrainConfig tc = cli::make_train_config(ctx.config);
    tc.model.spatial.defense_enabled = d;
    const SingleRun run = run_single(split, spec, tc, seed);
    const auto bundle = export_explanations(run.training, injection, query);
    const std::string tag = d ? "defense_on" : "defense_off";
    {
      auto f = open_out(ctx.out / ("coefficients_" + tag + ".csv"));
      write_coefficient_records(f, bundle);
    }
    std::vector<double> mal;
    for (const auto& r : bundle.coefficients)
      if (r.malicious && r.role == Role::Trustee) mal.push_back(r.coefficient);
    hist.push_back({"malicious, " + tag, std::move(mal)});
    summary[tag] = {{"malicious_mean", bundle.malicious_mean},
                    {"malicious_count", bundle.malicious_count},
                    {"benign_mean", bundle.benign_mean},
                    {"benign_count", bundle.benign_count}};
    if (d) {
      {
        auto f = open_out(ctx.out / "attention.csv");
        write_attention_trend(f, bundle);
      }
      PlotSeries s{"mean attention", {}, {}};
      for (const auto& a : bundle.attention) {
        s.x.push_back(static_cast<double>(a.timeslot + 1));
        s.y.push_back(a.mean_attention);
      }
      auto f = open_out(ctx.out / "attention.svg");
      write_line_plot_svg(f, "attention by timeslot", "timeslot", "mean attention", std::vector{s});
      if (query) {
        auto p = open_out(ctx.out / "path.csv");
        write_path(p, bundle);
        summary["path_edges"] = bundle.path.size();
      }
    }
  }
  if (summary["defense_off"]["malicious_count"].get<std::size_t>() > 0) {
    const double off = summary["defense_off"]["malicious_mean"], on = summary["defense_on"]["malicious_mean"];
    summary["relative_reduction"] = off > 0 ? (off - on) / off : 0.0;
    auto f = open_out(ctx.out / "coefficients.svg");
    write_histogram_svg(f, "robust coefficients of malicious edges", hist, 20, 0.0, 1.0);
  }
  write_json(ctx.out / "summary.json", summary);
  write_manifest(ctx);
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_homophily(Context& ctx) {
  const auto g = load(ctx.config);
  const auto labels = label_nodes(g.edges, g.scheme);
  const double ratio = edge_homophily_ratio(g.edges, labels);
  std::size_t good = 0;
  for (const auto& l : labels) good += l.label == NodeClass::Good;
  write_json(ctx.out / "homophily.json",
             {{"edge_homophily_ratio", ratio}, {"good_nodes", good}, {"bad_nodes", labels.size() - good}});
  write_manifest(ctx);
  std::printf("edge homophily ratio: %.4f\n", ratio);
  return 0;
}

int cmd_synth(Context& ctx) {
  const auto g = planted_graph(ctx.synth);
  fs::create_directories(ctx.out);
  write_edge_list(ctx.out / "edges.csv", g);
  write_manifest(ctx, {{"nodes", ctx.synth.nodes}, {"edges", g.edges.size()}, {"seed", ctx.synth.seed}});
  std::cout << (ctx.out / "edges.csv").string() << '\n';
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Numeric: return 4;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-graph trust evaluation"};
  Context ctx;
  const std::map<std::string, int (*)(Context&)> commands = {
      {"ingest", cmd_ingest}, {"train", cmd_train},     {"evaluate", cmd_evaluate},
      {"attack", cmd_attack}, {"ablate", cmd_ablate},   {"sweep", cmd_sweep},
      {"explain", cmd_explain}, {"homophily", cmd_homophily}, {"synth", cmd_synth}};
  std::vector<std::string> names;
  for (const auto& [k, v] : commands) names.push_back(k);
  app.add_option("command", ctx.command, "Command to run")->required()->check(CLI::IsMember(names));

  RunConfig f;  // flag values; applied only when given
  std::string config_path, segmentation, task, variant, attack, defense, poison;
  std::vector<std::string> query;
  bool quiet = false, verbose = false;
  auto* o_dataset = app.add_option("--dataset", f.dataset, "Edge list (source,target,rating,time)");
  auto* o_scheme = app.add_option("--scheme", f.scheme, "Trust level scheme: bitcoin or advogato");
  auto* o_snapshots = app.add_option("--snapshots", f.snapshots, "Number of snapshots n");
  auto* o_seg = app.add_option("--segmentation", segmentation)->check(CLI::IsMember({"time", "event"}));
  auto* o_event = app.add_option("--event-snapshots", f.event_snapshots, "Event-driven re-split count");
  auto* o_task = app.add_option("--task", task)->check(CLI::IsMember({"single", "multi", "unobserved"}));
  auto* o_upto = app.add_option("--train-upto", f.train_upto, "Training windows t (list)")->delimiter(',');
  auto* o_horizon = app.add_option("--horizon", f.horizon, "Multi-timeslot horizon");
  auto* o_variant = app.add_option("--variant", variant, "full, trustor, trustee, mean, decay or static");
  auto* o_attack = app.add_option("--attack", attack)->check(CLI::IsMember({"bad", "good", "onoff", "none"}));
  auto* o_frac = app.add_option("--attack-fraction", f.attack_fraction, "Share of targets attacked");
  auto* o_aedges = app.add_option("--attack-edges", f.attack_edges, "Edges per target (default: degree)");
  auto* o_pool = app.add_option("--attack-pool", f.attack_pool, "On-off attacker count");
  auto* o_poison = app.add_option("--poison", poison)->check(CLI::IsMember({"on", "off"}));
  auto* o_defense = app.add_option("--defense", defense)->check(CLI::IsMember({"on", "off"}));
  auto* o_thr = app.add_option("--threshold", f.threshold, "Pruning threshold");
  auto* o_layers = app.add_option("--layers", f.layers, "Propagation length L");
  auto* o_heads = app.add_option("--heads", f.heads, "Attention heads");
  auto* o_drop = app.add_option("--dropout", f.dropout, "Temporal dropout");
  auto* o_sdrop = app.add_option("--structural-dropout", f.structural_dropout, "Message dropout");
  auto* o_lr = app.add_option("--lr", f.learning_rate, "Learning rate");
  auto* o_epochs = app.add_option("--epochs", f.epochs, "Maximum epochs");
  auto* o_patience = app.add_option("--patience", f.patience, "Early-stopping patience");
  auto* o_l2 = app.add_option("--l2", f.l2, "L2 coefficient");
  auto* o_val = app.add_option("--validation-fraction", f.validation_fraction, "Held-out share");
  auto* o_seeds = app.add_option("--seeds", f.seeds, "Seeds (list)")->delimiter(',');
  auto* o_out = app.add_option("--out", f.out, "Output directory");
  auto* o_threads = app.add_option("--threads", f.threads, "Worker threads (0: all cores)");
  auto* o_param = app.add_option("--param", f.sweep, "Sweep parameter: layers, heads, threshold, snapshots");
  auto* o_values = app.add_option("--values", f.values, "Sweep values (list)")->delimiter(',');
  auto* o_query = app.add_option("--query", query, "Explain a trustor,trustee pair")->delimiter(',')->expected(2);
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--nodes", ctx.synth.nodes, "synth: node count");
  app.add_option("--edges", ctx.synth.edges, "synth: edge count");
  app.add_option("--seed", ctx.synth.seed, "synth: seed");
  app.add_flag("--quiet", quiet, "Only errors");
  app.add_flag("--verbose", verbose, "Per-epoch progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warn);
    RunConfig& c = ctx.config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) fail(ErrorKind::Config, "cannot read config file " + config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, "config file " + config_path + ": " + e.what());
      }
      ctx.defense_explicit = j.contains("defense");
      ctx.attack_explicit = j.contains("attack");
      cli::apply_json(c, j);
    }
    if (o_dataset->count()) c.dataset = f.dataset;
    if (o_scheme->count()) c.scheme = f.scheme;
    if (o_snapshots->count()) c.snapshots = f.snapshots;
    if (o_seg->count()) c.segmentation = segmentation;
    if (o_event->count()) c.event_snapshots = f.event_snapshots;
    if (o_task->count()) c.task = task;
    if (o_upto->count()) c.train_upto = f.train_upto;
    if (o_horizon->count()) c.horizon = f.horizon;
    if (o_variant->count()) c.variant = variant;
    if (o_attack->count()) c.attack = attack, ctx.attack_explicit = true;
    if (o_frac->count()) c.attack_fraction = f.attack_fraction;
    if (o_aedges->count()) c.attack_edges = f.attack_edges;
    if (o_pool->count()) c.attack_pool = f.attack_pool;
    if (o_poison->count()) c.poison = poison == "on";
    if (o_defense->count()) c.defense = defense == "on", ctx.defense_explicit = true;
    if (o_thr->count()) c.threshold = f.threshold;
    if (o_layers->count()) c.layers = f.layers;
    if (o_heads->count()) c.heads = f.heads;
    if (o_drop->count()) c.dropout = f.dropout;
    if (o_sdrop->count()) c.structural_dropout = f.structural_dropout;
    if (o_lr->count()) c.learning_rate = f.learning_rate;
    if (o_epochs->count()) c.epochs = f.epochs;
    if (o_patience->count()) c.patience = f.patience;
    if (o_l2->count()) c.l2 = f.l2;
    if (o_val->count()) c.validation_fraction = f.validation_fraction;
    if (o_seeds->count()) c.seeds = f.seeds;
    if (o_out->count()) c.out = f.out;
    if (o_threads->count()) c.threads = f.threads;
    if (o_param->count()) c.sweep = f.sweep;
    if (o_values->count()) c.values = f.values;
    if (o_query->count()) c.query = std::make_pair(query.at(0), query.at(1));
    c.validate();

    if (!c.out.empty()) {
      ctx.out = c.out;
    } else {
      const char* root = std::getenv("TRUSTGUARD_OUT");
      ctx.out = fs::path(root && *root ? root : "trustguard-out") / ctx.command;
    }
    return commands.at(ctx.command)(ctx);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
