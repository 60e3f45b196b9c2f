#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "trustguard/graph.hpp"
#include "trustguard/optim.hpp"
#include "trustguard/tensor.hpp"

namespace trustguard {

enum class Role : std::uint8_t { Trustee = 0, Trustor = 1 };

struct SpatialConfig {
  std::size_t input_dim = 64;                      // dim_0, width of the initial embeddings
  std::vector<std::size_t> layer_dims{32, 64, 32};  // output dim of each layer
  double prune_threshold = 0.5;
  bool defense_enabled = true;
  double structural_dropout = 0.0;
  bool use_trustee = true;  // false: TrustorGuard
  bool use_trustor = true;  // false: TrusteeGuard

  std::size_t layer_count() const { return layer_dims.size(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t layer_input_dim(std::size_t layer) const {
    return layer == 0 ? input_dim : layer_dims[layer - 1];
  }
  void validate() const;
};

// Output dims for a propagation length: 32, then 64s, closing with 32.
std::vector<std::size_t> default_layer_dims(std::size_t layers);

struct SpatialLayerParams {
  Tensor trustee_rating;  // W_te, dim_{l-1} x |W|
  Tensor trustor_rating;  // W_tr, dim_{l-1} x |W|
  Tensor fuse_weight;     // W_both, dim_l x 4 dim_{l-1}
  Tensor fuse_bias;       // b_both, 1 x dim_l
};

// Registers W_te, W_tr, W_both, b_both per layer and the carry-forward
// projection P (output_dim x input_dim).
void init_spatial_params(ParameterStore& store, const SpatialConfig& config, std::size_t level_count);
SpatialLayerParams spatial_layer(const ParameterStore& store, std::size_t layer);
const Tensor& carry_projection(const ParameterStore& store);

// omega = W_role * onehot(level), returned as a 1 x dim row.
Tensor embed_rating(Level level, const Tensor& rating_matrix);
// Batched form: row e holds column levels[e] of the rating matrix.
Tensor embed_ratings(std::span<const Level> levels, const Tensor& rating_matrix);

// Msg = h_neighbor (+) omega, row-wise concatenation.
Tensor build_message(const Tensor& neighbor, const Tensor& omega);

// Steps 2-4 from clamped similarities (E x 1): normalise within each group,
// zero entries below thr, renormalise survivors. A group whose entries are all
// pruned keeps its pre-pruning weights.
Tensor robust_weights(const Tensor& similarity, std::span<const std::uint32_t> group,
                      std::size_t group_count, double threshold);
// Step 1 (cosine similarity clamped to [0,1]) followed by robust_weights, or
// uniform 1/|N| weights when the defense is off.
Tensor robust_coefficients(const Tensor& embeddings, std::span<const std::uint32_t> self,
                           std::span<const std::uint32_t> neighbor, std::size_t node_count,
                           double threshold, bool defense_enabled);

// sum_e r_e * Msg_e per group; empty groups get zero rows.
Tensor aggregate_role(const Tensor& messages, const Tensor& coefficients,
                      std::span<const std::uint32_t> group, std::size_t node_count);

// ReLU(W_both (h_te (+) h_tr) + b_both).
Tensor fuse_roles(const Tensor& trustee, const Tensor& trustor, const SpatialLayerParams& params);

// Snapshot re-indexed for aggregation: active nodes get local ids, self-loops
// are dropped, defense-off weights are precomputed.
struct SnapshotPlan {
  std::size_t node_count = 0;            // global
  std::vector<NodeId> active;            // local -> global, sorted
  std::vector<std::uint32_t> active_index;  // same ids as uint32 for gather/scatter
  std::vector<std::uint32_t> source;     // local trustor of each edge
  std::vector<std::uint32_t> target;     // local trustee of each edge
  std::vector<Level> level;
  std::vector<TrustEdge> edges;          // global edges aligned with source/target
  Tensor uniform_trustee;                // 1/|N_u(te)| per edge
  Tensor uniform_trustor;                // 1/|N_u(tr)| per edge
  Tensor inactive_mask;                  // N x 1, 1 for nodes absent from the snapshot
};

SnapshotPlan plan_snapshot(const Snapshot& snapshot, std::size_t node_count);

// Per-layer, per-role robust coefficients (aligned with SnapshotPlan::edges)
// and the pre-fusion role embeddings of the active nodes.
struct SpatialTrace {
  std::vector<std::array<std::vector<double>, 2>> coefficients;
  std::vector<std::array<Tensor, 2>> role_embeddings;
};

struct SpatialContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
  SpatialTrace* trace = nullptr;
};

// Embeddings for all N nodes after L layers over one snapshot. Nodes absent
// from the snapshot take their row of `carried`.
Tensor spatial_forward(const SnapshotPlan& plan, const Tensor& initial, const Tensor& carried,
                       const SpatialConfig& config, const ParameterStore& store,
                       const SpatialContext& context = {});

}  // namespace trustguard
