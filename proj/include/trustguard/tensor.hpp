#pragma once

// Dense row-major matrices with reverse-mode differentiation.
//
// Every tensor is two-dimensional (vectors are 1 x n or n x 1, scalars 1 x 1).
// Operations on tensors that require gradients record a backward closure; a
// call to backward() on a scalar output walks the recorded graph in reverse
// topological order. Leaf gradients accumulate across backward() calls until
// zero_grad(); interior gradients are recomputed on every pass.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace trustguard {

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor full(std::size_t rows, std::size_t cols, double value, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return rows() * cols(); }
  std::vector<std::size_t> shape() const { return {rows(), cols()}; }
  std::string shape_str() const;

  std::span<const double> values() const;
  // Direct writes bypass the recorded graph; only meant for leaves.
  std::span<double> mutable_values();
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  // Allocates (if needed) and clears the gradient buffer.
  void zero_grad();

  // Requires a 1 x 1 tensor. Seeds d(out)/d(out) = 1.
  void backward() const;

  // Same values, no history, no gradient requirement.
  Tensor detach() const;
  Tensor clone_leaf(bool requires_grad) const;

  const detail::Node* id() const noexcept { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct TensorAccess;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// ---- primitives -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);      // a (m x k) * b (k x n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);   // a (m x k) * b^T, b (n x k)
// Same shape, or b broadcast as a 1 x c row, or b a 1 x 1 scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Same shape, or b broadcast as an r x 1 column, or b a 1 x 1 scalar.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor softmax_rows(const Tensor& a);
Tensor log_clamped(const Tensor& a, double floor = 1e-12);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> index);
Tensor scatter_add_rows(const Tensor& a, std::span<const std::uint32_t> index,
                        std::size_t out_rows);
Tensor row_sum(const Tensor& a);   // r x 1
Tensor sum(const Tensor& a);       // 1 x 1
Tensor square_sum(const Tensor& a);  // 1 x 1, sum of squares
Tensor l2norm_rows(const Tensor& a);                   // r x 1
Tensor cosine_rows(const Tensor& a, const Tensor& b);  // r x 1, 0 for zero rows
// Column vector x (n x 1) normalised within groups: y_i = x_i / sum_{g(j)=g(i)} x_j.
// Groups with a zero sum receive uniform weights 1/|group| (no gradient).
Tensor segment_normalize(const Tensor& x, std::span<const std::uint32_t> group,
                         std::size_t group_count);
// r x 1 tensor holding a(i, index[i]).
Tensor pick(const Tensor& a, std::span<const std::uint32_t> index);
// Inverted dropout: kept entries are scaled by 1 / (1 - rate).
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

}  // namespace trustguard
