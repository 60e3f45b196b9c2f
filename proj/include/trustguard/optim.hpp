#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "trustguard/tensor.hpp"

namespace trustguard {

// Named learnable tensors, iterated in name order.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed), rng_(seed) {}

  // Uniform in [-a, a] with a = sqrt(6 / (rows + cols)).
  Tensor& add_matrix(const std::string& name, std::size_t rows, std::size_t cols);
  Tensor& add_zeros(const std::string& name, std::size_t rows, std::size_t cols);
  Tensor& add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::uint64_t seed() const { return seed_; }
  std::size_t scalar_count() const;

  // Deep copy of the values (fresh leaves, no gradients).
  ParameterStore snapshot() const;
  // Overwrites values from a store with identical names and shapes.
  void assign_from(const ParameterStore& other);

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::map<std::string, Tensor> params_;
};

struct AdamConfig {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

// Bias-corrected Adam update of every parameter; zeroes gradients afterwards.
void adam_step(ParameterStore& store, AdamState& state);

// Text container of (name, shape, values) triples plus seed and step. Values
// are written as hexadecimal floats so a load reproduces them bit for bit.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     std::uint64_t step);
struct LoadedCheckpoint {
  ParameterStore store;
  std::uint64_t step = 0;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace trustguard
