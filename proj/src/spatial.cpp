#include "trustguard/spatial.hpp"

#include <algorithm>
#include <string>

#include "trustguard/error.hpp"

namespace trustguard {

namespace {

std::string layer_name(std::size_t layer, const char* what) {
  return "spatial." + std::to_string(layer) + "." + what;
}

}  // namespace

void SpatialConfig::validate() const {
  if (layer_dims.empty()) fail(ErrorKind::Config, "spatial: at least one layer is required");
  if (input_dim == 0) fail(ErrorKind::Config, "spatial: input dimension must be positive");
  for (auto d : layer_dims) {
    if (d == 0) fail(ErrorKind::Config, "spatial: layer dimensions must be positive");
  }
  if (!(prune_threshold >= 0.0 && prune_threshold < 1.0)) {
    fail(ErrorKind::Config, "spatial: prune threshold must lie in [0,1)");
  }
  if (!(structural_dropout >= 0.0 && structural_dropout < 1.0)) {
    fail(ErrorKind::Config, "spatial: structural dropout must lie in [0,1)");
  }
  if (!use_trustee && !use_trustor) {
    fail(ErrorKind::Config, "spatial: at least one role branch must be enabled");
  }
}

std::vector<std::size_t> default_layer_dims(std::size_t layers) {
  if (layers == 0) fail(ErrorKind::Config, "propagation length must be >= 1");
  std::vector<std::size_t> dims(layers, 64);
  dims.front() = 32;
  dims.back() = 32;
  return dims;
}

void init_spatial_params(ParameterStore& store, const SpatialConfig& config, std::size_t level_count) {
  config.validate();
  for (std::size_t l = 0; l < config.layer_count(); ++l) {
    const std::size_t in = config.layer_input_dim(l);
    const std::size_t out = config.layer_dims[l];
    store.add_matrix(layer_name(l, "W_te"), in, level_count);
    store.add_matrix(layer_name(l, "W_tr"), in, level_count);
    store.add_matrix(layer_name(l, "W_both"), out, 4 * in);
    store.add_zeros(layer_name(l, "b_both"), 1, out);
  }
  store.add_matrix("spatial.P", config.output_dim(), config.input_dim);
}

SpatialLayerParams spatial_layer(const ParameterStore& store, std::size_t layer) {
  return {store.at(layer_name(layer, "W_te")), store.at(layer_name(layer, "W_tr")),
          store.at(layer_name(layer, "W_both")), store.at(layer_name(layer, "b_both"))};
}

const Tensor& carry_projection(const ParameterStore& store) { return store.at("spatial.P"); }

Tensor embed_rating(Level level, const Tensor& rating_matrix) {
  const Level levels[] = {level};
  return embed_ratings(levels, rating_matrix);
}

Tensor embed_ratings(std::span<const Level> levels, const Tensor& rating_matrix) {
  const std::size_t width = rating_matrix.cols();
  std::vector<double> onehot(levels.size() * width, 0.0);
  for (std::size_t e = 0; e < levels.size(); ++e) {
    if (levels[e] >= width) {
      fail(ErrorKind::Dimension, "embed_rating: level " + std::to_string(levels[e]) +
                                     " outside " + std::to_string(width) + " trust levels");
    }
    onehot[e * width + levels[e]] = 1.0;
  }
  return matmul_nt(Tensor::from(levels.size(), width, std::move(onehot)), rating_matrix);
}

Tensor build_message(const Tensor& neighbor, const Tensor& omega) {
  if (neighbor.rows() != omega.rows() || neighbor.cols() != omega.cols()) {
    fail(ErrorKind::Dimension, "build_message: shape mismatch " + neighbor.shape_str() + " vs " +
                                   omega.shape_str());
  }
  return concat_cols({neighbor, omega});
}

Tensor robust_weights(const Tensor& similarity, std::span<const std::uint32_t> group,
                      std::size_t group_count, double threshold) {
  const Tensor normalized = segment_normalize(similarity, group, group_count);
  const auto values = normalized.values();
  std::vector<double> keep(values.size(), 0.0);
  std::vector<std::uint8_t> any_kept(group_count, 0);
  for (std::size_t e = 0; e < values.size(); ++e) {
    if (values[e] >= threshold) {
      keep[e] = 1.0;
      any_kept[group[e]] = 1;
    }
  }
  bool pruned_any = false;
  for (std::size_t e = 0; e < values.size(); ++e) {
    if (!any_kept[group[e]]) keep[e] = 1.0;  // all-pruned fallback
    pruned_any = pruned_any || keep[e] == 0.0;
  }
  if (!pruned_any) return normalized;
  const Tensor mask = Tensor::from(values.size(), 1, std::move(keep));
  const Tensor survivors = mul(normalized, mask);
  return segment_normalize(survivors, group, group_count);
}

Tensor robust_coefficients(const Tensor& embeddings, std::span<const std::uint32_t> self,
                           std::span<const std::uint32_t> neighbor, std::size_t node_count,
                           double threshold, bool defense_enabled) {
  if (self.size() != neighbor.size()) {
    fail(ErrorKind::Dimension, "robust_coefficients: misaligned edge endpoint lists");
  }
  if (!defense_enabled) {
    std::vector<double> counts(node_count, 0.0);
    for (auto s : self) counts.at(s) += 1.0;
    std::vector<double> w(self.size());
    for (std::size_t e = 0; e < self.size(); ++e) w[e] = 1.0 / counts[self[e]];
    return Tensor::from(self.size(), 1, std::move(w));
  }
  const Tensor sim = clamp(cosine_rows(gather_rows(embeddings, self), gather_rows(embeddings, neighbor)),
                           0.0, 1.0);
  return robust_weights(sim, self, node_count, threshold);
}

Tensor aggregate_role(const Tensor& messages, const Tensor& coefficients,
                      std::span<const std::uint32_t> group, std::size_t node_count) {
  if (messages.rows() != coefficients.rows() || coefficients.cols() != 1 ||
      group.size() != messages.rows()) {
    fail(ErrorKind::Dimension, "aggregate_role: misaligned messages " + messages.shape_str() +
                                   " and coefficients " + coefficients.shape_str());
  }
  return scatter_add_rows(mul(messages, coefficients), group, node_count);
}

Tensor fuse_roles(const Tensor& trustee, const Tensor& trustor, const SpatialLayerParams& params) {
  if (trustee.rows() != trustor.rows() || trustee.cols() != trustor.cols()) {
    fail(ErrorKind::Dimension, "fuse_roles: shape mismatch " + trustee.shape_str() + " vs " +
                                   trustor.shape_str());
  }
  return relu(add(matmul_nt(concat_cols({trustee, trustor}), params.fuse_weight), params.fuse_bias));
}

SnapshotPlan plan_snapshot(const Snapshot& snapshot, std::size_t node_count) {
  SnapshotPlan plan;
  plan.node_count = node_count;
  plan.active = snapshot.nodes();
  if (!plan.active.empty() && plan.active.back() >= node_count) {
    fail(ErrorKind::Data, "plan_snapshot: node id outside the graph's node range");
  }
  plan.active_index.assign(plan.active.begin(), plan.active.end());
  auto local = [&](NodeId n) {
    return static_cast<std::uint32_t>(std::lower_bound(plan.active.begin(), plan.active.end(), n) -
                                      plan.active.begin());
  };
  for (const auto& e : snapshot.edges()) {
    if (e.source == e.target) continue;
    plan.source.push_back(local(e.source));
    plan.target.push_back(local(e.target));
    plan.level.push_back(e.level);
    plan.edges.push_back(e);
  }
  const std::size_t n = plan.active.size();
  std::vector<double> in_deg(n, 0.0), out_deg(n, 0.0);
  for (std::size_t e = 0; e < plan.edges.size(); ++e) {
    in_deg[plan.target[e]] += 1.0;
    out_deg[plan.source[e]] += 1.0;
  }
  std::vector<double> ute(plan.edges.size()), utr(plan.edges.size());
  for (std::size_t e = 0; e < plan.edges.size(); ++e) {
    ute[e] = 1.0 / in_deg[plan.target[e]];
    utr[e] = 1.0 / out_deg[plan.source[e]];
  }
  plan.uniform_trustee = Tensor::from(plan.edges.size(), 1, std::move(ute));
  plan.uniform_trustor = Tensor::from(plan.edges.size(), 1, std::move(utr));
  std::vector<double> mask(node_count, 1.0);
  for (NodeId a : plan.active) mask[a] = 0.0;
  plan.inactive_mask = Tensor::from(node_count, 1, std::move(mask));
  return plan;
}

namespace {

std::vector<double> copy_values(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

Tensor spatial_forward(const SnapshotPlan& plan, const Tensor& initial, const Tensor& carried,
                       const SpatialConfig& config, const ParameterStore& store,
                       const SpatialContext& context) {
  if (initial.rows() != plan.node_count || initial.cols() != config.input_dim) {
    fail(ErrorKind::Dimension, "spatial_forward: initial embeddings " + initial.shape_str() +
                                   " do not match " + std::to_string(plan.node_count) + " nodes x " +
                                   std::to_string(config.input_dim));
  }
  if (carried.rows() != plan.node_count || carried.cols() != config.output_dim()) {
    fail(ErrorKind::Dimension, "spatial_forward: carried embeddings " + carried.shape_str() +
                                   " have the wrong shape");
  }
  if (context.trace) {
    context.trace->coefficients.assign(config.layer_count(), {});
    context.trace->role_embeddings.assign(config.layer_count(), {});
  }
  if (plan.active.empty()) return carried;

  const std::size_t n = plan.active.size();
  Tensor h = gather_rows(initial, plan.active_index);
  for (std::size_t l = 0; l < config.layer_count(); ++l) {
    const SpatialLayerParams params = spatial_layer(store, l);
    const std::size_t msg_dim = 2 * config.layer_input_dim(l);

    auto branch = [&](Role role) -> Tensor {
      const bool trustee = role == Role::Trustee;
      if (!(trustee ? config.use_trustee : config.use_trustor) || plan.edges.empty()) {
        return Tensor::zeros(n, msg_dim);
      }
      // Trustee role of u aggregates in-edges v->u; trustor role aggregates out-edges u->v.
      const auto& self = trustee ? plan.target : plan.source;
      const auto& other = trustee ? plan.source : plan.target;
      Tensor coeff = config.defense_enabled
                         ? robust_coefficients(h, self, other, n, config.prune_threshold, true)
                         : (trustee ? plan.uniform_trustee : plan.uniform_trustor);
      Tensor omega = embed_ratings(plan.level, trustee ? params.trustee_rating : params.trustor_rating);
      Tensor msg = build_message(gather_rows(h, other), omega);
      if (context.training && config.structural_dropout > 0.0 && context.rng) {
        msg = dropout(msg, config.structural_dropout, *context.rng);
      }
      if (context.trace) {
        context.trace->coefficients[l][static_cast<std::size_t>(role)] = copy_values(coeff);
      }
      return aggregate_role(msg, coeff, self, n);
    };

    Tensor h_te = branch(Role::Trustee);
    Tensor h_tr = branch(Role::Trustor);
    if (context.trace) context.trace->role_embeddings[l] = {h_te.detach(), h_tr.detach()};
    h = fuse_roles(h_te, h_tr, params);
  }
  // Scatter active rows back into the global matrix; absent rows keep `carried`.
  return add(mul(carried, plan.inactive_mask), scatter_add_rows(h, plan.active_index, plan.node_count));
}

}  // namespace trustguard
