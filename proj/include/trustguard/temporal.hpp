#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "trustguard/optim.hpp"
#include "trustguard/tensor.hpp"

namespace trustguard {

enum class TemporalMode { Attention, Mean, Decay };

struct TemporalConfig {
  std::size_t dim = 32;  // d', equal to the last spatial layer width
  std::size_t heads = 8;
  double dropout = 0.5;  // applied to head outputs at train time
  TemporalMode mode = TemporalMode::Attention;
  double decay_tau = 1.0;  // in timeslots, GuardDecay only

  std::size_t head_dim() const { return dim / heads; }
  void validate() const;
};

// temporal.pos (n x d'), temporal.W_Q / W_K / W_V (d' x d'; head s owns rows
// [s*d_head, (s+1)*d_head)). Only registered for the attention mode.
void init_temporal_params(ParameterStore& store, const TemporalConfig& config, std::size_t timeslots);

// Sequence element i is the N x d' embedding matrix of timeslot t_{i+1};
// every node's sequence is processed independently.
using Sequence = std::vector<Tensor>;

Sequence add_positional(const Sequence& sequence, const Tensor& positional);

// alpha (N x n) from the projections W_Q h^{t_n} (N x d_head) and W_K h^{t_i}.
Tensor attention_from_projections(const Tensor& query, const Sequence& keys);
// sum_i alpha_i * values_i, with values_i = W_V h^{t_i} (N x d_head).
Tensor fuse_from_projections(const Sequence& values, const Tensor& alpha);

// Single-head forms taking d_head x d' projection matrices.
Tensor attention_scores(const Sequence& sequence, const Tensor& query_weight, const Tensor& key_weight);
Tensor temporal_fuse(const Sequence& sequence, const Tensor& alpha, const Tensor& value_weight);

// Per head: N x n attention scores, row-major.
struct AttentionRecord {
  std::size_t nodes = 0;
  std::size_t timeslots = 0;
  std::vector<std::vector<double>> heads;

  double score(std::size_t head, std::size_t node, std::size_t timeslot) const {
    return heads[head][node * timeslots + timeslot];
  }
};

struct TemporalContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
  AttentionRecord* record = nullptr;
};

// Concatenation of the S head outputs (N x d'). W_Q, W_K, W_V are d' x d' with
// stacked head blocks.
Tensor multi_head(const Sequence& sequence, const Tensor& query_weight, const Tensor& key_weight,
                  const Tensor& value_weight, std::size_t heads, double dropout,
                  const TemporalContext& context = {});

Tensor variant_mean(const Sequence& sequence);
Tensor variant_decay(const Sequence& sequence, double tau);
std::vector<double> decay_weights(std::size_t timeslots, double tau);

// Dispatches on config.mode: positional encoding + multi-head attention,
// plain mean, or exponential decay.
Tensor temporal_forward(const Sequence& sequence, const ParameterStore& store,
                        const TemporalConfig& config, const TemporalContext& context = {});

}  // namespace trustguard
