#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "trustguard/harness.hpp"

namespace trustguard::cli {

// Everything a command needs, resolved from defaults, a JSON file and flags
// (flags win). Keys in the JSON file use the field names below.
struct RunConfig {
  std::string dataset;
  std::string scheme = "bitcoin";
  std::size_t snapshots = 10;
  std::string segmentation = "time";
  std::optional<std::size_t> event_snapshots;
  std::string task = "single";
  std::vector<std::size_t> train_upto;  // empty: full sweep (train/explain: see command)
  std::size_t horizon = 3;
  std::string variant = "full";
  std::string attack = "none";
  double attack_fraction = 0.1;
  std::optional<std::size_t> attack_edges;
  std::size_t attack_pool = 10;
  bool poison = true;
  bool defense = true;
  std::optional<double> threshold;  // dataset profile when unset
  std::size_t layers = 3;
  std::optional<std::size_t> heads;  // dataset profile when unset
  double dropout = 0.5;
  double structural_dropout = 0.0;
  double learning_rate = 0.005;
  std::size_t epochs = 50;
  std::size_t patience = 10;
  double l2 = 1e-5;
  double validation_fraction = 0.05;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out;
  std::size_t threads = 0;
  std::string sweep = "layers";
  std::vector<double> values;
  std::optional<std::pair<std::string, std::string>> query;  // original identifiers

  // Heads 16 / threshold 0.3 for files whose name mentions "alpha"; 8 / 0.5 otherwise.
  double resolved_threshold() const;
  std::size_t resolved_heads() const;

  void validate() const;
  nlohmann::json to_json() const;
};

// Overwrites fields named in `j`; unknown keys or wrong types are Config errors.
void apply_json(RunConfig& config, const nlohmann::json& j);

TrainConfig make_train_config(const RunConfig& config);
TaskSpec make_task_spec(const RunConfig& config);
std::optional<AttackSpec> make_attack(const RunConfig& config);

}  // namespace trustguard::cli
