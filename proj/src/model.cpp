#include "trustguard/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "trustguard/error.hpp"
#include "trustguard/log.hpp"

namespace trustguard {

namespace {

constexpr std::pair<Variant, std::string_view> kVariantNames[] = {
    {Variant::Full, "full"},
    {Variant::TrustorGuard, "trustor"},
    {Variant::TrusteeGuard, "trustee"},
    {Variant::GuardMean, "mean"},
    {Variant::GuardDecay, "decay"},
    {Variant::StaticMean, "static"},
};

}  // namespace

std::string_view variant_name(Variant variant) {
  for (const auto& [v, name] : kVariantNames) {
    if (v == variant) return name;
  }
  return "full";
}

Variant parse_variant(std::string_view name) {
  for (const auto& [v, n] : kVariantNames) {
    if (n == name) return v;
  }
  fail(ErrorKind::Config, "unknown variant '" + std::string(name) +
                              "' (expected full, trustor, trustee, mean, decay or static)");
}

void ModelConfig::validate() const {
  spatial.validate();
  temporal.validate();
  if (temporal.dim != spatial.output_dim()) {
    fail(ErrorKind::Config, "temporal dimension " + std::to_string(temporal.dim) +
                                " must equal the last spatial layer dimension " +
                                std::to_string(spatial.output_dim()));
  }
  if (hidden_layer && hidden_dim == 0) fail(ErrorKind::Config, "hidden layer width must be positive");
}

void apply_variant(ModelConfig& config, Variant variant) {
  switch (variant) {
    case Variant::Full:
      break;
    case Variant::TrustorGuard:
      config.spatial.use_trustee = false;
      break;
    case Variant::TrusteeGuard:
      config.spatial.use_trustor = false;
      break;
    case Variant::GuardMean:
      config.temporal.mode = TemporalMode::Mean;
      break;
    case Variant::GuardDecay:
      config.temporal.mode = TemporalMode::Decay;
      break;
    case Variant::StaticMean:
      config.temporal.mode = TemporalMode::Mean;
      config.spatial.defense_enabled = false;
      break;
  }
}

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0)) fail(ErrorKind::Config, "learning rate must be positive");
  if (!(l2 >= 0.0)) fail(ErrorKind::Config, "L2 coefficient must be non-negative");
  if (max_epochs == 0) fail(ErrorKind::Config, "max_epochs must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    fail(ErrorKind::Config, "validation fraction must lie in [0,1)");
  }
  for (double b : class_weights) {
    if (!(b > 0.0)) fail(ErrorKind::Config, "class weights must be positive");
  }
}

PredictionResult to_prediction(std::span<const double> probabilities) {
  PredictionResult out;
  out.probabilities.assign(probabilities.begin(), probabilities.end());
  const auto top = std::max_element(probabilities.begin(), probabilities.end());
  out.predicted_level = static_cast<Level>(top - probabilities.begin());
  double second = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (i != out.predicted_level) second = std::max(second, probabilities[i]);
  }
  out.margin = probabilities.size() > 1 ? *top - second : *top;
  return out;
}

Tensor initial_embeddings(std::size_t node_count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5eed0f1a17e6b3d1ULL);
  const double a = std::sqrt(6.0 / static_cast<double>(node_count + dim));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> v(node_count * dim);
  for (double& x : v) x = u(rng);
  return Tensor::from(node_count, dim, std::move(v));
}

void init_predictor_params(ParameterStore& store, const ModelConfig& config, std::size_t level_count) {
  const std::size_t in = 2 * config.temporal.dim;
  if (config.hidden_layer) {
    store.add_matrix("predictor.W_h", config.hidden_dim, in);
    store.add_zeros("predictor.b_h", 1, config.hidden_dim);
    store.add_matrix("predictor.W", level_count, config.hidden_dim);
  } else {
    store.add_matrix("predictor.W", level_count, in);
  }
  store.add_zeros("predictor.b", 1, level_count);
}

PredictionResult predict_edge(const Tensor& trustor, const Tensor& trustee, const Tensor& weight,
                              const Tensor& bias) {
  if (trustor.rows() != 1 || trustee.rows() != 1 || trustor.cols() != trustee.cols() ||
      weight.cols() != 2 * trustor.cols()) {
    fail(ErrorKind::Dimension, "predict_edge: embeddings " + trustor.shape_str() + " and " +
                                   trustee.shape_str() + " do not fit weight " + weight.shape_str());
  }
  const Tensor p = softmax_rows(add(matmul_nt(concat_cols({trustor, trustee}), weight), bias));
  return to_prediction(p.values());
}

Tensor predict_probabilities(const Tensor& embeddings, std::span<const TrustEdge> edges,
                             const ParameterStore& store, const ModelConfig& config) {
  std::vector<std::uint32_t> src(edges.size()), dst(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    src[e] = edges[e].source;
    dst[e] = edges[e].target;
  }
  Tensor x = concat_cols({gather_rows(embeddings, src), gather_rows(embeddings, dst)});
  if (config.hidden_layer) {
    x = relu(add(matmul_nt(x, store.at("predictor.W_h")), store.at("predictor.b_h")));
  }
  return softmax_rows(add(matmul_nt(x, store.at("predictor.W")), store.at("predictor.b")));
}

Tensor weighted_ce_loss(const Tensor& probabilities, std::span<const Level> truths,
                        std::span<const double> class_weights, double l2, const ParameterStore& store) {
  if (truths.size() != probabilities.rows()) {
    fail(ErrorKind::Dimension, "weighted_ce_loss: " + std::to_string(truths.size()) + " labels for " +
                                   probabilities.shape_str() + " predictions");
  }
  if (class_weights.size() != probabilities.cols()) {
    fail(ErrorKind::Dimension, "weighted_ce_loss: " + std::to_string(class_weights.size()) +
                                   " class weights for " + std::to_string(probabilities.cols()) + " levels");
  }
  std::vector<std::uint32_t> flat(truths.size());
  std::vector<double> beta(truths.size());
  for (std::size_t e = 0; e < truths.size(); ++e) {
    if (truths[e] >= probabilities.cols()) fail(ErrorKind::Dimension, "weighted_ce_loss: label out of range");
    flat[e] = truths[e];
    beta[e] = -class_weights[truths[e]];
  }
  Tensor loss = truths.empty()
                    ? Tensor::scalar(0.0)
                    : sum(mul(log_clamped(pick(probabilities, flat)), Tensor::from(truths.size(), 1, beta)));
  // Added even for l2 = 0 so that every parameter receives a (possibly zero) gradient.
  for (const auto& [name, param] : store) loss = add(loss, scale(square_sum(param), l2));
  return loss;
}

std::vector<double> inverse_frequency_weights(std::span<const TrustEdge> edges, std::size_t level_count) {
  std::vector<double> counts(level_count, 0.0);
  for (const auto& e : edges) counts.at(e.level) += 1.0;
  std::size_t present = 0;
  for (double c : counts) present += c > 0.0;
  std::vector<double> w(level_count, 1.0);
  for (std::size_t c = 0; c < level_count; ++c) {
    if (counts[c] > 0.0) w[c] = static_cast<double>(edges.size()) / (static_cast<double>(present) * counts[c]);
  }
  return w;
}

Tensor forward_embeddings(const ModelConfig& config, const ParameterStore& store, const Tensor& initial,
                          const std::vector<SnapshotPlan>& plans, const ForwardOptions& options) {
  if (plans.empty()) fail(ErrorKind::Config, "forward: no snapshots");
  if (options.spatial) options.spatial->assign(plans.size(), {});
  Tensor carried = matmul_nt(initial, carry_projection(store));
  Sequence sequence;
  sequence.reserve(plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) {
    SpatialContext ctx{options.training, options.rng, options.spatial ? &(*options.spatial)[i] : nullptr};
    carried = spatial_forward(plans[i], initial, carried, config.spatial, store, ctx);
    sequence.push_back(carried);
  }
  TemporalContext tctx{options.training, options.rng, options.attention};
  return temporal_forward(sequence, store, config.temporal, tctx);
}

Tensor TrainedModel::embed(const std::vector<SnapshotPlan>& plans, const ForwardOptions& options) const {
  if (config.temporal.mode == TemporalMode::Attention && plans.size() != timeslots) {
    fail(ErrorKind::Config, "model was trained on " + std::to_string(timeslots) + " snapshots, got " +
                                std::to_string(plans.size()));
  }
  return forward_embeddings(config, params, initial, plans, options);
}

std::vector<PredictionResult> TrainedModel::predict(const Tensor& embeddings,
                                                    std::span<const TrustEdge> edges) const {
  NoGradGuard guard;
  const Tensor p = predict_probabilities(embeddings, edges, params, config);
  std::vector<PredictionResult> out;
  out.reserve(edges.size());
  const auto values = p.values();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    out.push_back(to_prediction(values.subspan(e * level_count, level_count)));
  }
  return out;
}

namespace {

// floor(fraction * n_c) edges per class, chosen by a seeded shuffle.
std::vector<std::uint8_t> validation_mask(std::span<const TrustEdge> edges, std::size_t level_count,
                                          double fraction, std::uint64_t seed) {
  std::vector<std::uint8_t> mask(edges.size(), 0);
  if (fraction <= 0.0) return mask;
  std::mt19937_64 rng(seed ^ 0x7a11da7e501177ULL);
  for (Level c = 0; c < level_count; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e].level == c) members.push_back(e);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < take; ++i) mask[members[i]] = 1;
  }
  return mask;
}

double accuracy(const Tensor& probabilities, std::span<const Level> truths) {
  if (truths.empty()) return 0.0;
  const auto v = probabilities.values();
  const std::size_t k = probabilities.cols();
  std::size_t hits = 0;
  for (std::size_t e = 0; e < truths.size(); ++e) {
    const auto row = v.subspan(e * k, k);
    hits += static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()) == truths[e];
  }
  return static_cast<double>(hits) / static_cast<double>(truths.size());
}

std::vector<Level> levels_of(std::span<const TrustEdge> edges) {
  std::vector<Level> out(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) out[e] = edges[e].level;
  return out;
}

}  // namespace

TrainResult train(const std::vector<Snapshot>& snapshots, const Tensor& initial, std::size_t level_count,
                  const TrainConfig& config) {
  config.validate();
  const ModelConfig& mc = config.model;
  if (snapshots.empty() || (snapshots.size() < 2 && mc.temporal.mode == TemporalMode::Attention)) {
    fail(ErrorKind::Config, "training needs at least 2 snapshots for the attention layer, got " +
                                std::to_string(snapshots.size()));
  }
  if (initial.cols() != mc.spatial.input_dim) {
    fail(ErrorKind::Dimension, "initial embeddings " + initial.shape_str() + " do not have width " +
                                   std::to_string(mc.spatial.input_dim));
  }
  const std::size_t node_count = initial.rows();

  // Edge universe: union over snapshots, self-loops dropped.
  std::vector<TrustEdge> all;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    for (const auto& e : snapshots[i].edges()) {
      if (e.source == e.target) continue;
      all.push_back(e);
      owner.push_back(i);
    }
  }
  if (all.empty()) fail(ErrorKind::Data, "training snapshots contain no edges");

  const auto held = validation_mask(all, level_count, config.validation_fraction, config.seed);
  std::vector<TrustEdge> train_edges, val_edges;
  std::vector<std::vector<TrustEdge>> kept(snapshots.size());
  for (std::size_t e = 0; e < all.size(); ++e) {
    if (held[e]) {
      val_edges.push_back(all[e]);
    } else {
      train_edges.push_back(all[e]);
      kept[owner[e]].push_back(all[e]);
    }
  }
  std::vector<SnapshotPlan> train_plans;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& s = snapshots[i];
    train_plans.push_back(plan_snapshot(Snapshot(s.index(), s.window_start(), s.window_end(), s.right_closed(),
                                                 std::move(kept[i])),
                                        node_count));
  }

  TrainResult result;
  TrainedModel& model = result.model;
  model.config = mc;
  model.level_count = level_count;
  model.timeslots = snapshots.size();
  model.seed = config.seed;
  model.initial = initial;
  model.params = ParameterStore(config.seed);
  init_spatial_params(model.params, mc.spatial, level_count);
  init_temporal_params(model.params, mc.temporal, snapshots.size());
  init_predictor_params(model.params, mc, level_count);

  const std::vector<double> beta =
      config.class_weights.empty() ? inverse_frequency_weights(train_edges, level_count) : config.class_weights;
  if (beta.size() != level_count) {
    fail(ErrorKind::Config, "expected " + std::to_string(level_count) + " class weights, got " +
                                std::to_string(beta.size()));
  }
  const auto train_truth = levels_of(train_edges);
  const auto val_truth = levels_of(val_edges);

  AdamState adam;
  adam.config.learning_rate = config.learning_rate;
  std::mt19937_64 rng(config.seed ^ 0xd1ce0ff5e7ULL);
  double best = std::numeric_limits<double>::infinity();
  ParameterStore best_params = model.params.snapshot();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    model.params.zero_grad();
    {
      ForwardOptions opt{true, &rng, nullptr, nullptr};
      const Tensor h = forward_embeddings(mc, model.params, initial, train_plans, opt);
      const Tensor p = predict_probabilities(h, train_edges, model.params, mc);
      const Tensor loss = weighted_ce_loss(p, train_truth, beta, config.l2, model.params);
      rec.train_loss = loss.item();
      if (!std::isfinite(rec.train_loss)) {
        fail(ErrorKind::Numeric, "training loss became non-finite at epoch " + std::to_string(epoch));
      }
      rec.train_accuracy = accuracy(p, train_truth);
      loss.backward();
    }
    adam_step(model.params, adam);

    if (!val_edges.empty()) {
      NoGradGuard guard;
      const Tensor h = forward_embeddings(mc, model.params, initial, train_plans);
      const Tensor p = predict_probabilities(h, val_edges, model.params, mc);
      const double v = weighted_ce_loss(p, val_truth, beta, 0.0, ParameterStore{}).item();
      if (!std::isfinite(v)) {
        fail(ErrorKind::Numeric, "validation loss became non-finite at epoch " + std::to_string(epoch));
      }
      rec.validation_loss = v;
      if (v < best) {
        best = v;
        best_params = model.params.snapshot();
        result.best_epoch = epoch;
        rec.improved = true;
        since_best = 0;
      } else {
        ++since_best;
      }
    } else {
      result.best_epoch = epoch;
    }
    log_info("epoch " + std::to_string(epoch) + " loss " + std::to_string(rec.train_loss) +
             (rec.validation_loss ? " val " + std::to_string(*rec.validation_loss) : std::string()));
    result.history.push_back(rec);
    if (!val_edges.empty() && config.patience > 0 && since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (!val_edges.empty()) model.params.assign_from(best_params);
  result.validation_edges = std::move(val_edges);

  // Explanation records over the full training structure.
  for (const auto& s : snapshots) result.plans.push_back(plan_snapshot(s, node_count));
  {
    NoGradGuard guard;
    ForwardOptions opt{false, nullptr, &result.coefficients, &result.attention};
    model.embed(result.plans, opt);
  }
  return result;
}

}  // namespace trustguard
