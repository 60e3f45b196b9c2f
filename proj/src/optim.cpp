#include "trustguard/optim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trustguard/error.hpp"

namespace trustguard {

Tensor& ParameterStore::add_matrix(const std::string& name, std::size_t rows, std::size_t cols) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = dist(rng_);
  return add(name, Tensor::from(rows, cols, std::move(values), true));
}

Tensor& ParameterStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  return add(name, Tensor::zeros(rows, cols, true));
}

Tensor& ParameterStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) fail(ErrorKind::State, "parameter '" + name + "' already exists");
  if (!value.requires_grad()) value = value.clone_leaf(true);
  return params_.emplace(name, std::move(value)).first->second;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorKind::State, "unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorKind::State, "unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

ParameterStore ParameterStore::snapshot() const {
  ParameterStore copy(seed_);
  for (const auto& [name, t] : params_) copy.params_.emplace(name, t.clone_leaf(true));
  return copy;
}

void ParameterStore::assign_from(const ParameterStore& other) {
  for (auto& [name, t] : params_) {
    const Tensor& src = other.at(name);
    if (src.rows() != t.rows() || src.cols() != t.cols()) {
      fail(ErrorKind::Dimension, "assign_from: shape mismatch for '" + name + "'");
    }
    auto dst = t.mutable_values();
    auto vals = src.values();
    std::copy(vals.begin(), vals.end(), dst.begin());
  }
}

void adam_step(ParameterStore& store, AdamState& state) {
  for (auto& [name, t] : store) {
    if (!t.has_grad()) fail(ErrorKind::State, "adam_step: parameter '" + name + "' has no gradient");
  }
  ++state.step;
  const auto& cfg = state.config;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, t] : store) {
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() != t.size()) m.assign(t.size(), 0.0);
    if (v.size() != t.size()) v.assign(t.size(), 0.0);
    auto values = t.mutable_values();
    auto grad = t.mutable_grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      grad[i] = 0.0;
    }
  }
}

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     std::uint64_t step) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Data, "cannot write checkpoint " + path.string());
  out << "trustguard-checkpoint 1\n";
  out << "seed " << store.seed() << "\n";
  out << "step " << step << "\n";
  out << "params " << store.size() << "\n";
  for (const auto& [name, t] : store) {
    out << "param " << name << " " << t.rows() << " " << t.cols() << "\n";
    const auto vals = t.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      out << hex(vals[i]) << ((i + 1) % t.cols() == 0 ? '\n' : ' ');
    }
  }
  if (!out) fail(ErrorKind::Data, "failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Data, "cannot open checkpoint " + path.string());
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "trustguard-checkpoint" || version != 1) {
    fail(ErrorKind::Data, "not a checkpoint file: " + path.string());
  }
  std::uint64_t seed = 0, step = 0;
  std::size_t count = 0;
  in >> tag >> seed;
  if (tag != "seed") fail(ErrorKind::Data, "checkpoint: expected 'seed'");
  in >> tag >> step;
  if (tag != "step") fail(ErrorKind::Data, "checkpoint: expected 'step'");
  in >> tag >> count;
  if (tag != "params") fail(ErrorKind::Data, "checkpoint: expected 'params'");
  LoadedCheckpoint result{ParameterStore(seed), step};
  for (std::size_t p = 0; p < count; ++p) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    in >> tag >> name >> rows >> cols;
    if (tag != "param" || !in) fail(ErrorKind::Data, "checkpoint: malformed parameter header");
    std::vector<double> values(rows * cols);
    for (double& v : values) {
      std::string token;
      in >> token;
      if (!in) fail(ErrorKind::Data, "checkpoint: truncated values for '" + name + "'");
      v = std::strtod(token.c_str(), nullptr);
    }
    result.store.add(name, Tensor::from(rows, cols, std::move(values), true));
  }
  return result;
}

}  // namespace trustguard
