#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trustguard/graph.hpp"
#include "trustguard/optim.hpp"
#include "trustguard/spatial.hpp"
#include "trustguard/temporal.hpp"
#include "trustguard/tensor.hpp"

namespace trustguard {

enum class Variant { Full, TrustorGuard, TrusteeGuard, GuardMean, GuardDecay, StaticMean };

std::string_view variant_name(Variant variant);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  SpatialConfig spatial;
  TemporalConfig temporal;
  bool hidden_layer = false;
  std::size_t hidden_dim = 32;

  void validate() const;
};

// TrustorGuard/TrusteeGuard drop a role branch, GuardMean/GuardDecay replace
// the attention layer, StaticMean also switches the defense off (the
// single-snapshot part is the harness's job).
void apply_variant(ModelConfig& config, Variant variant);

struct TrainConfig {
  double learning_rate = 0.005;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  double l2 = 1e-5;
  std::vector<double> class_weights;  // empty: inverse class frequency, mean 1 over edges
  double validation_fraction = 0.05;
  std::uint64_t seed = 1;
  ModelConfig model;

  void validate() const;
};

struct PredictionResult {
  std::vector<double> probabilities;
  Level predicted_level = 0;
  double margin = 0.0;  // top-1 minus top-2 probability
};

PredictionResult to_prediction(std::span<const double> probabilities);

// Uniform in [-a, a], a = sqrt(6 / (nodes + dim)), as for weight matrices;
// fixed for the lifetime of a model.
Tensor initial_embeddings(std::size_t node_count, std::size_t dim, std::uint64_t seed);

void init_predictor_params(ParameterStore& store, const ModelConfig& config, std::size_t level_count);

// softmax(W (h_u (+) h_v) + b) for one pair of 1 x d' rows.
PredictionResult predict_edge(const Tensor& trustor, const Tensor& trustee, const Tensor& weight,
                              const Tensor& bias);

// E x |W| probabilities for the given edges, trustor embedding first.
Tensor predict_probabilities(const Tensor& embeddings, std::span<const TrustEdge> edges,
                             const ParameterStore& store, const ModelConfig& config);

// -sum_e beta_{truth(e)} log p_{e,truth(e)} + l2 * sum of squared parameters.
Tensor weighted_ce_loss(const Tensor& probabilities, std::span<const Level> truths,
                        std::span<const double> class_weights, double l2, const ParameterStore& store);

std::vector<double> inverse_frequency_weights(std::span<const TrustEdge> edges, std::size_t level_count);

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;
  std::vector<SpatialTrace>* spatial = nullptr;  // one per snapshot
  AttentionRecord* attention = nullptr;
};

// Final node embeddings (N x d') after the spatial pass over every snapshot and
// the temporal layer.
Tensor forward_embeddings(const ModelConfig& config, const ParameterStore& store, const Tensor& initial,
                          const std::vector<SnapshotPlan>& plans, const ForwardOptions& options = {});

struct TrainedModel {
  ModelConfig config;
  std::size_t level_count = 0;
  std::size_t timeslots = 0;
  std::uint64_t seed = 0;
  ParameterStore params;
  Tensor initial;  // h0

  Tensor embed(const std::vector<SnapshotPlan>& plans, const ForwardOptions& options = {}) const;
  std::vector<PredictionResult> predict(const Tensor& embeddings, std::span<const TrustEdge> edges) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> validation_loss;
  double train_accuracy = 0.0;
  bool improved = false;
};

struct TrainResult {
  TrainedModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  std::vector<TrustEdge> validation_edges;
  // Explanation records from a final inference pass with the returned parameters.
  std::vector<SnapshotPlan> plans;
  std::vector<SpatialTrace> coefficients;
  AttentionRecord attention;
};

// Full-batch training over the union of snapshot edges (self-loops excluded).
// A seeded, class-stratified validation share is held out of both the loss and
// the message-passing structure; the best-validation parameters are returned.
TrainResult train(const std::vector<Snapshot>& snapshots, const Tensor& initial, std::size_t level_count,
                  const TrainConfig& config);

}  // namespace trustguard
