#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "trustguard/error.hpp"

namespace trustguard::cli {

using nlohmann::json;

namespace {

bool alpha_profile(const std::string& dataset) {
  std::string name = std::filesystem::path(dataset).filename().string();
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  return name.find("alpha") != std::string::npos;
}

template <class T>
void read(const json& j, const char* key, T& field) {
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& field) {
  if (j.at(key).is_null()) {
    field.reset();
    return;
  }
  T v{};
  read(j, key, v);
  field = v;
}

}  // namespace

double RunConfig::resolved_threshold() const { return threshold.value_or(alpha_profile(dataset) ? 0.3 : 0.5); }

std::size_t RunConfig::resolved_heads() const { return heads.value_or(alpha_profile(dataset) ? 16 : 8); }

void RunConfig::validate() const {
  TrustLevelScheme::by_name(scheme);
  parse_segmentation(segmentation);
  parse_task(task);
  parse_variant(variant);
  if (attack != "none") parse_attack(attack);
  if (layers == 0) fail(ErrorKind::Config, "layers must be >= 1");
  if (threads > 1024) fail(ErrorKind::Config, "thread count is unreasonably large");
  if (query && query->first == query->second) fail(ErrorKind::Config, "query needs two distinct nodes");
  make_train_config(*this).validate();
  make_train_config(*this).model.validate();
  TaskSpec spec = make_task_spec(*this);
  spec.validate();
}

json RunConfig::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["scheme"] = scheme;
  j["snapshots"] = snapshots;
  j["segmentation"] = segmentation;
  j["event_snapshots"] = event_snapshots ? json(*event_snapshots) : json(nullptr);
  j["task"] = task;
  j["train_upto"] = train_upto;
  j["horizon"] = horizon;
  j["variant"] = variant;
  j["attack"] = attack;
  j["attack_fraction"] = attack_fraction;
  j["attack_edges"] = attack_edges ? json(*attack_edges) : json(nullptr);
  j["attack_pool"] = attack_pool;
  j["poison"] = poison;
  j["defense"] = defense;
  j["threshold"] = resolved_threshold();
  j["layers"] = layers;
  j["heads"] = resolved_heads();
  j["dropout"] = dropout;
  j["structural_dropout"] = structural_dropout;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["patience"] = patience;
  j["l2"] = l2;
  j["validation_fraction"] = validation_fraction;
  j["seeds"] = seeds;
  j["threads"] = threads;
  j["sweep"] = sweep;
  j["values"] = values;
  j["query"] = query ? json::array({query->first, query->second}) : json(nullptr);
  return j;
}

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) fail(ErrorKind::Config, "config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") read(j, "dataset", c.dataset);
    else if (key == "scheme") read(j, "scheme", c.scheme);
    else if (key == "snapshots") read(j, "snapshots", c.snapshots);
    else if (key == "segmentation") read(j, "segmentation", c.segmentation);
    else if (key == "event_snapshots") read_optional(j, "event_snapshots", c.event_snapshots);
    else if (key == "task") read(j, "task", c.task);
    else if (key == "train_upto") read(j, "train_upto", c.train_upto);
    else if (key == "horizon") read(j, "horizon", c.horizon);
    else if (key == "variant") read(j, "variant", c.variant);
    else if (key == "attack") read(j, "attack", c.attack);
    else if (key == "attack_fraction") read(j, "attack_fraction", c.attack_fraction);
    else if (key == "attack_edges") read_optional(j, "attack_edges", c.attack_edges);
    else if (key == "attack_pool") read(j, "attack_pool", c.attack_pool);
    else if (key == "poison") read(j, "poison", c.poison);
    else if (key == "defense") read(j, "defense", c.defense);
    else if (key == "threshold") read_optional(j, "threshold", c.threshold);
    else if (key == "layers") read(j, "layers", c.layers);
    else if (key == "heads") read_optional(j, "heads", c.heads);
    else if (key == "dropout") read(j, "dropout", c.dropout);
    else if (key == "structural_dropout") read(j, "structural_dropout", c.structural_dropout);
    else if (key == "learning_rate") read(j, "learning_rate", c.learning_rate);
    else if (key == "epochs") read(j, "epochs", c.epochs);
    else if (key == "patience") read(j, "patience", c.patience);
    else if (key == "l2") read(j, "l2", c.l2);
    else if (key == "validation_fraction") read(j, "validation_fraction", c.validation_fraction);
    else if (key == "seeds") read(j, "seeds", c.seeds);
    else if (key == "out") read(j, "out", c.out);
    else if (key == "threads") read(j, "threads", c.threads);
    else if (key == "sweep") read(j, "sweep", c.sweep);
    else if (key == "values") read(j, "values", c.values);
    else if (key == "query") {
      if (value.is_null()) {
        c.query.reset();
      } else {
        std::vector<std::string> pair;
        read(j, "query", pair);
        if (pair.size() != 2) fail(ErrorKind::Config, "config key 'query' needs [trustor, trustee]");
        c.query = std::make_pair(pair[0], pair[1]);
      }
    } else {
      fail(ErrorKind::Config, "unknown config key '" + key + "'");
    }
  }
}

TrainConfig make_train_config(const RunConfig& c) {
  TrainConfig t;
  t.learning_rate = c.learning_rate;
  t.max_epochs = c.epochs;
  t.patience = c.patience;
  t.l2 = c.l2;
  t.validation_fraction = c.validation_fraction;
  t.model.spatial.layer_dims = layer_schedule(std::max<std::size_t>(c.layers, 1));
  t.model.spatial.prune_threshold = c.resolved_threshold();
  t.model.spatial.defense_enabled = c.defense;
  t.model.spatial.structural_dropout = c.structural_dropout;
  t.model.temporal.dim = t.model.spatial.output_dim();
  t.model.temporal.heads = c.resolved_heads();
  t.model.temporal.dropout = c.dropout;
  return t;
}

std::optional<AttackSpec> make_attack(const RunConfig& c) {
  if (c.attack == "none") return std::nullopt;
  AttackSpec a;
  a.kind = parse_attack(c.attack);
  a.target_fraction = c.attack_fraction;
  a.edges_per_target = c.attack_edges;
  a.attacker_pool = c.attack_pool;
  a.poison_training = c.poison;
  return a;
}

TaskSpec make_task_spec(const RunConfig& c) {
  TaskSpec s;
  s.kind = parse_task(c.task);
  s.train_upto = c.train_upto;
  s.horizon = c.horizon;
  s.segmentation = parse_segmentation(c.segmentation);
  s.snapshot_count = c.snapshots;
  s.event_snapshot_count = c.event_snapshots;
  s.attack = make_attack(c);
  s.variant = parse_variant(c.variant);
  s.seeds = c.seeds;
  return s;
}

}  // namespace trustguard::cli
