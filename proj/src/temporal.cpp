#include "trustguard/temporal.hpp"

#include <cmath>
#include <string>

#include "trustguard/error.hpp"

namespace trustguard {

void TemporalConfig::validate() const {
  if (dim == 0 || heads == 0) fail(ErrorKind::Config, "temporal: dimension and head count must be positive");
  if (dim % heads != 0) {
    fail(ErrorKind::Config, "temporal: " + std::to_string(heads) + " heads do not divide dimension " +
                                std::to_string(dim));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorKind::Config, "temporal: dropout must lie in [0,1)");
  if (mode == TemporalMode::Decay && !(decay_tau > 0.0)) {
    fail(ErrorKind::Config, "temporal: decay scale must be positive");
  }
}

void init_temporal_params(ParameterStore& store, const TemporalConfig& config, std::size_t timeslots) {
  config.validate();
  if (config.mode != TemporalMode::Attention) return;
  if (timeslots == 0) fail(ErrorKind::Config, "temporal: positional table needs at least one timeslot");
  store.add_matrix("temporal.pos", timeslots, config.dim);
  store.add_matrix("temporal.W_Q", config.dim, config.dim);
  store.add_matrix("temporal.W_K", config.dim, config.dim);
  store.add_matrix("temporal.W_V", config.dim, config.dim);
}

namespace {

void check_sequence(const Sequence& sequence, const char* op) {
  if (sequence.empty()) fail(ErrorKind::Dimension, std::string(op) + ": empty sequence");
  for (const auto& h : sequence) {
    if (h.rows() != sequence.front().rows() || h.cols() != sequence.front().cols()) {
      fail(ErrorKind::Dimension, std::string(op) + ": sequence elements differ in shape " +
                                     sequence.front().shape_str() + " vs " + h.shape_str());
    }
  }
}

Tensor variant_weighted(const Sequence& sequence, const std::vector<double>& weights) {
  Tensor out;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    Tensor term = scale(sequence[i], weights[i]);
    out = out.defined() ? add(out, term) : term;
  }
  return out;
}

Tensor row(const Tensor& t, std::size_t r) {
  const std::uint32_t idx[] = {static_cast<std::uint32_t>(r)};
  return gather_rows(t, idx);
}

}  // namespace

Sequence add_positional(const Sequence& sequence, const Tensor& positional) {
  check_sequence(sequence, "add_positional");
  if (positional.rows() != sequence.size() || positional.cols() != sequence.front().cols()) {
    fail(ErrorKind::Dimension, "add_positional: table " + positional.shape_str() + " does not match " +
                                   std::to_string(sequence.size()) + " timeslots of width " +
                                   std::to_string(sequence.front().cols()));
  }
  Sequence out;
  out.reserve(sequence.size());
  for (std::size_t i = 0; i < sequence.size(); ++i) out.push_back(add(sequence[i], row(positional, i)));
  return out;
}

Tensor attention_from_projections(const Tensor& query, const Sequence& keys) {
  check_sequence(keys, "attention_scores");
  const double inv = 1.0 / std::sqrt(static_cast<double>(query.cols()));
  std::vector<Tensor> logits;
  logits.reserve(keys.size());
  for (const auto& k : keys) logits.push_back(row_sum(mul(query, k)));
  return softmax_rows(scale(concat_cols(logits), inv));
}

Tensor fuse_from_projections(const Sequence& values, const Tensor& alpha) {
  check_sequence(values, "temporal_fuse");
  if (alpha.cols() != values.size() || alpha.rows() != values.front().rows()) {
    fail(ErrorKind::Dimension, "temporal_fuse: scores " + alpha.shape_str() + " do not match " +
                                   std::to_string(values.size()) + " timeslots");
  }
  Tensor out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Tensor term = mul(values[i], slice_cols(alpha, i, i + 1));
    out = out.defined() ? add(out, term) : term;
  }
  return out;
}

Tensor attention_scores(const Sequence& sequence, const Tensor& query_weight, const Tensor& key_weight) {
  check_sequence(sequence, "attention_scores");
  Sequence keys;
  for (const auto& h : sequence) keys.push_back(matmul_nt(h, key_weight));
  return attention_from_projections(matmul_nt(sequence.back(), query_weight), keys);
}

Tensor temporal_fuse(const Sequence& sequence, const Tensor& alpha, const Tensor& value_weight) {
  check_sequence(sequence, "temporal_fuse");
  Sequence values;
  for (const auto& h : sequence) values.push_back(matmul_nt(h, value_weight));
  return fuse_from_projections(values, alpha);
}

Tensor multi_head(const Sequence& sequence, const Tensor& query_weight, const Tensor& key_weight,
                  const Tensor& value_weight, std::size_t heads, double dropout,
                  const TemporalContext& context) {
  check_sequence(sequence, "multi_head");
  const std::size_t dim = sequence.front().cols();
  if (heads == 0 || dim % heads != 0) {
    fail(ErrorKind::Config, "multi_head: " + std::to_string(heads) + " heads do not divide dimension " +
                                std::to_string(dim));
  }
  const std::size_t dh = dim / heads;
  // All heads at once: row block s of W projects onto columns [s*dh, (s+1)*dh).
  const Tensor query = matmul_nt(sequence.back(), query_weight);
  Sequence keys, values;
  for (const auto& h : sequence) {
    keys.push_back(matmul_nt(h, key_weight));
    values.push_back(matmul_nt(h, value_weight));
  }
  if (context.record) {
    context.record->nodes = sequence.front().rows();
    context.record->timeslots = sequence.size();
    context.record->heads.assign(heads, {});
  }
  std::vector<Tensor> outputs;
  outputs.reserve(heads);
  for (std::size_t s = 0; s < heads; ++s) {
    const std::size_t b = s * dh, e = b + dh;
    Sequence head_keys, head_values;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
      head_keys.push_back(slice_cols(keys[i], b, e));
      head_values.push_back(slice_cols(values[i], b, e));
    }
    const Tensor alpha = attention_from_projections(slice_cols(query, b, e), head_keys);
    if (context.record) context.record->heads[s].assign(alpha.values().begin(), alpha.values().end());
    Tensor out = fuse_from_projections(head_values, alpha);
    if (context.training && dropout > 0.0 && context.rng) out = trustguard::dropout(out, dropout, *context.rng);
    outputs.push_back(out);
  }
  return heads == 1 ? outputs.front() : concat_cols(outputs);
}

std::vector<double> decay_weights(std::size_t timeslots, double tau) {
  if (!(tau > 0.0)) fail(ErrorKind::Config, "variant_decay: decay scale must be positive");
  if (timeslots == 0) fail(ErrorKind::Dimension, "variant_decay: empty sequence");
  std::vector<double> w(timeslots);
  double total = 0.0;
  for (std::size_t i = 0; i < timeslots; ++i) {
    w[i] = std::exp((static_cast<double>(i) - static_cast<double>(timeslots - 1)) / tau);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

Tensor variant_mean(const Sequence& sequence) {
  check_sequence(sequence, "variant_mean");
  return variant_weighted(sequence, std::vector<double>(sequence.size(), 1.0 / sequence.size()));
}

Tensor variant_decay(const Sequence& sequence, double tau) {
  check_sequence(sequence, "variant_decay");
  return variant_weighted(sequence, decay_weights(sequence.size(), tau));
}

Tensor temporal_forward(const Sequence& sequence, const ParameterStore& store,
                        const TemporalConfig& config, const TemporalContext& context) {
  switch (config.mode) {
    case TemporalMode::Mean:
      return variant_mean(sequence);
    case TemporalMode::Decay:
      return variant_decay(sequence, config.decay_tau);
    case TemporalMode::Attention:
      break;
  }
  const Sequence encoded = add_positional(sequence, store.at("temporal.pos"));
  return multi_head(encoded, store.at("temporal.W_Q"), store.at("temporal.W_K"), store.at("temporal.W_V"),
                    config.heads, config.dropout, context);
}

}  // namespace trustguard
