#include "trustguard/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "trustguard/error.hpp"

namespace trustguard {

namespace detail {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

struct TensorAccess {
  static const NodePtr& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }
};

namespace {

thread_local bool g_grad_enabled = true;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

const NodePtr& node_of(const Tensor& t, const char* op) {
  const auto& n = TensorAccess::node(t);
  if (!n) fail(ErrorKind::State, std::string(op) + ": undefined tensor");
  return n;
}

std::string shape_of(const Node& n) {
  return "(" + std::to_string(n.rows) + "x" + std::to_string(n.cols) + ")";
}

[[noreturn]] void dim_error(const char* op, const Node& a, const Node& b) {
  fail(ErrorKind::Dimension,
       std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

ConstMap cmap(const Node& n) { return ConstMap(n.value.data(), n.rows, n.cols); }
ConstMap gmap(const Node& n) { return ConstMap(n.grad.data(), n.rows, n.cols); }
MutMap gmut(Node& n) { return MutMap(n.grad.data(), n.rows, n.cols); }

bool wants(const NodePtr& p) { return p->requires_grad && !p->grad.empty(); }

// Builds the result node; records history only when some parent needs it.
Tensor make(std::size_t rows, std::size_t cols, std::vector<double> value,
            std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
  auto out = std::make_shared<Node>();
  out->rows = rows;
  out->cols = cols;
  out->value = std::move(value);
  bool any = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) any = any || p->requires_grad;
  }
  if (any) {
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward = std::move(backward);
  }
  return TensorAccess::wrap(std::move(out));
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, value), requires_grad);
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values,
                    bool requires_grad) {
  if (values.size() != rows * cols) {
    fail(ErrorKind::Dimension, "tensor: " + std::to_string(values.size()) +
                                   " values do not fill shape (" + std::to_string(rows) +
                                   "x" + std::to_string(cols) + ")");
  }
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from(1, 1, {value}, requires_grad);
}

std::size_t Tensor::rows() const { return node_of(*this, "rows")->rows; }
std::size_t Tensor::cols() const { return node_of(*this, "cols")->cols; }

std::string Tensor::shape_str() const { return shape_of(*node_of(*this, "shape")); }

std::span<const double> Tensor::values() const { return node_of(*this, "values")->value; }
std::span<double> Tensor::mutable_values() { return node_of(*this, "values")->value; }

double Tensor::at(std::size_t r, std::size_t c) const {
  const auto& n = node_of(*this, "at");
  if (r >= n->rows || c >= n->cols) fail(ErrorKind::Dimension, "at: index out of range");
  return n->value[r * n->cols + c];
}

double Tensor::item() const {
  const auto& n = node_of(*this, "item");
  if (n->rows * n->cols != 1) fail(ErrorKind::State, "item: tensor is not a scalar " + shape_of(*n));
  return n->value[0];
}

bool Tensor::requires_grad() const { return node_of(*this, "requires_grad")->requires_grad; }
bool Tensor::has_grad() const { return !node_of(*this, "grad")->grad.empty(); }
std::span<const double> Tensor::grad() const { return node_of(*this, "grad")->grad; }
std::span<double> Tensor::mutable_grad() { return node_of(*this, "grad")->grad; }

void Tensor::zero_grad() {
  auto& n = *node_of(*this, "zero_grad");
  n.grad.assign(n.value.size(), 0.0);
}

Tensor Tensor::detach() const {
  const auto& n = node_of(*this, "detach");
  return from(n->rows, n->cols, n->value, false);
}

Tensor Tensor::clone_leaf(bool requires_grad) const {
  const auto& n = node_of(*this, "clone");
  return from(n->rows, n->cols, n->value, requires_grad);
}

void Tensor::backward() const {
  const auto& root = node_of(*this, "backward");
  if (root->rows * root->cols != 1) {
    fail(ErrorKind::State, "backward: output must be a scalar, got " + shape_of(*root));
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    const bool interior = static_cast<bool>(n->backward);
    if (interior) {
      n->grad.assign(n->value.size(), 0.0);
    } else if (n->grad.size() != n->value.size()) {
      n->grad.assign(n->value.size(), 0.0);
    }
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---- primitives -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& A = node_of(a, "matmul");
  const auto& B = node_of(b, "matmul");
  if (A->cols != B->rows) dim_error("matmul", *A, *B);
  std::vector<double> out(A->rows * B->cols);
  MutMap(out.data(), A->rows, B->cols).noalias() = cmap(*A) * cmap(*B);
  return make(A->rows, B->cols, std::move(out), {A, B}, [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) gmut(*pa).noalias() += gmap(self) * cmap(*pb).transpose();
    if (wants(pb)) gmut(*pb).noalias() += cmap(*pa).transpose() * gmap(self);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const auto& A = node_of(a, "matmul_nt");
  const auto& B = node_of(b, "matmul_nt");
  if (A->cols != B->cols) dim_error("matmul_nt", *A, *B);
  std::vector<double> out(A->rows * B->rows);
  MutMap(out.data(), A->rows, B->rows).noalias() = cmap(*A) * cmap(*B).transpose();
  return make(A->rows, B->rows, std::move(out), {A, B}, [](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa)) gmut(*pa).noalias() += gmap(self) * cmap(*pb);
    if (wants(pb)) gmut(*pb).noalias() += gmap(self).transpose() * cmap(*pa);
  });
}

namespace {

enum class Broadcast { Same, Row, Column, Scalar };

Broadcast classify(const char* op, const Node& a, const Node& b, bool allow_row, bool allow_col) {
  if (a.rows == b.rows && a.cols == b.cols) return Broadcast::Same;
  if (b.rows == 1 && b.cols == 1) return Broadcast::Scalar;
  if (allow_row && b.rows == 1 && b.cols == a.cols) return Broadcast::Row;
  if (allow_col && b.cols == 1 && b.rows == a.rows) return Broadcast::Column;
  dim_error(op, a, b);
}

std::size_t bindex(Broadcast mode, std::size_t r, std::size_t c, std::size_t cols) {
  switch (mode) {
    case Broadcast::Same: return r * cols + c;
    case Broadcast::Row: return c;
    case Broadcast::Column: return r;
    case Broadcast::Scalar: return 0;
  }
  return 0;
}

Tensor add_like(const Tensor& a, const Tensor& b, double sign, const char* op) {
  const auto& A = node_of(a, op);
  const auto& B = node_of(b, op);
  const Broadcast mode = classify(op, *A, *B, true, false);
  const std::size_t rows = A->rows, cols = A->cols;
  std::vector<double> out(A->value);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] += sign * B->value[bindex(mode, r, c, cols)];
  return make(rows, cols, std::move(out), {A, B}, [mode, sign](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    if (wants(pa))
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    if (wants(pb)) {
      for (std::size_t r = 0; r < self.rows; ++r)
        for (std::size_t c = 0; c < self.cols; ++c)
          pb->grad[bindex(mode, r, c, self.cols)] += sign * self.grad[r * self.cols + c];
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_like(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto& A = node_of(a, "mul");
  const auto& B = node_of(b, "mul");
  const Broadcast mode = classify("mul", *A, *B, false, true);
  const std::size_t rows = A->rows, cols = A->cols;
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = A->value[r * cols + c] * B->value[bindex(mode, r, c, cols)];
  return make(rows, cols, std::move(out), {A, B}, [mode](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    for (std::size_t r = 0; r < self.rows; ++r) {
      for (std::size_t c = 0; c < self.cols; ++c) {
        const std::size_t i = r * self.cols + c;
        const std::size_t j = bindex(mode, r, c, self.cols);
        if (wants(pa)) pa->grad[i] += self.grad[i] * pb->value[j];
        if (wants(pb)) pb->grad[j] += self.grad[i] * pa->value[i];
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  const auto& A = node_of(a, "scale");
  std::vector<double> out(A->value);
  for (double& v : out) v *= factor;
  return make(A->rows, A->cols, std::move(out), {A}, [factor](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += factor * self.grad[i];
  });
}

Tensor relu(const Tensor& a) {
  const auto& A = node_of(a, "relu");
  std::vector<double> out(A->value);
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return make(A->rows, A->cols, std::move(out), {A}, [](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (pa->value[i] > 0.0) pa->grad[i] += self.grad[i];
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  const auto& A = node_of(a, "clamp");
  std::vector<double> out(A->value);
  for (double& v : out) v = std::clamp(v, lo, hi);
  return make(A->rows, A->cols, std::move(out), {A}, [lo, hi](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = pa->value[i];
      if (v > lo && v < hi) pa->grad[i] += self.grad[i];
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const auto& A = node_of(a, "softmax_rows");
  const std::size_t rows = A->rows, cols = A->cols;
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = &A->value[r * cols];
    double* y = &out[r * cols];
    const double m = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (y[c] = std::exp(x[c] - m));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= z;
  }
  return make(rows, cols, std::move(out), {A}, [](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t r = 0; r < self.rows; ++r) {
      const double* y = &self.value[r * self.cols];
      const double* dy = &self.grad[r * self.cols];
      double dot = 0.0;
      for (std::size_t c = 0; c < self.cols; ++c) dot += dy[c] * y[c];
      for (std::size_t c = 0; c < self.cols; ++c)
        pa->grad[r * self.cols + c] += y[c] * (dy[c] - dot);
    }
  });
}

Tensor log_clamped(const Tensor& a, double floor) {
  const auto& A = node_of(a, "log_clamped");
  std::vector<double> out(A->value);
  for (double& v : out) v = std::log(std::max(v, floor));
  return make(A->rows, A->cols, std::move(out), {A}, [floor](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (pa->value[i] > floor) pa->grad[i] += self.grad[i] / pa->value[i];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorKind::Dimension, "concat_cols: no inputs");
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  std::size_t cols = 0;
  const std::size_t rows = node_of(parts.front(), "concat_cols")->rows;
  for (const auto& p : parts) {
    const auto& n = node_of(p, "concat_cols");
    if (n->rows != rows) dim_error("concat_cols", *node_of(parts.front(), "concat_cols"), *n);
    cols += n->cols;
    nodes.push_back(n);
  }
  std::vector<double> out(rows * cols);
  std::size_t offset = 0;
  for (const auto& n : nodes) {
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(&n->value[r * n->cols], n->cols, &out[r * cols + offset]);
    offset += n->cols;
  }
  return make(rows, cols, std::move(out), nodes, [](Node& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      if (wants(p)) {
        for (std::size_t r = 0; r < self.rows; ++r)
          for (std::size_t c = 0; c < p->cols; ++c)
            p->grad[r * p->cols + c] += self.grad[r * self.cols + offset + c];
      }
      offset += p->cols;
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  const auto& A = node_of(a, "slice_cols");
  if (begin > end || end > A->cols) {
    fail(ErrorKind::Dimension, "slice_cols: range [" + std::to_string(begin) + "," +
                                   std::to_string(end) + ") outside " + shape_of(*A));
  }
  const std::size_t rows = A->rows, width = end - begin;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(&A->value[r * A->cols + begin], width, &out[r * width]);
  return make(rows, width, std::move(out), {A}, [begin](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t r = 0; r < self.rows; ++r)
      for (std::size_t c = 0; c < self.cols; ++c)
        pa->grad[r * pa->cols + begin + c] += self.grad[r * self.cols + c];
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> index) {
  const auto& A = node_of(a, "gather_rows");
  const std::size_t cols = A->cols;
  std::vector<double> out(index.size() * cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= A->rows) {
      fail(ErrorKind::Dimension, "gather_rows: row " + std::to_string(index[i]) +
                                     " outside " + shape_of(*A));
    }
    std::copy_n(&A->value[index[i] * cols], cols, &out[i * cols]);
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return make(index.size(), cols, std::move(out), {A}, [idx = std::move(idx)](Node& self) {
    auto& pa = self.parents[0];
    const std::size_t cols = self.cols;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c) pa->grad[idx[i] * cols + c] += self.grad[i * cols + c];
  });
}

Tensor scatter_add_rows(const Tensor& a, std::span<const std::uint32_t> index,
                        std::size_t out_rows) {
  const auto& A = node_of(a, "scatter_add_rows");
  if (index.size() != A->rows) {
    fail(ErrorKind::Dimension, "scatter_add_rows: " + std::to_string(index.size()) +
                                   " indices for " + shape_of(*A));
  }
  const std::size_t cols = A->cols;
  std::vector<double> out(out_rows * cols, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= out_rows) fail(ErrorKind::Dimension, "scatter_add_rows: index out of range");
    for (std::size_t c = 0; c < cols; ++c) out[index[i] * cols + c] += A->value[i * cols + c];
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return make(out_rows, cols, std::move(out), {A}, [idx = std::move(idx)](Node& self) {
    auto& pa = self.parents[0];
    const std::size_t cols = self.cols;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c) pa->grad[i * cols + c] += self.grad[idx[i] * cols + c];
  });
}

Tensor row_sum(const Tensor& a) {
  const auto& A = node_of(a, "row_sum");
  std::vector<double> out(A->rows, 0.0);
  for (std::size_t r = 0; r < A->rows; ++r)
    for (std::size_t c = 0; c < A->cols; ++c) out[r] += A->value[r * A->cols + c];
  return make(A->rows, 1, std::move(out), {A}, [](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t r = 0; r < pa->rows; ++r)
      for (std::size_t c = 0; c < pa->cols; ++c) pa->grad[r * pa->cols + c] += self.grad[r];
  });
}

Tensor sum(const Tensor& a) {
  const auto& A = node_of(a, "sum");
  double s = 0.0;
  for (double v : A->value) s += v;
  return make(1, 1, {s}, {A}, [](Node& self) {
    auto& pa = self.parents[0];
    for (double& g : pa->grad) g += self.grad[0];
  });
}

Tensor square_sum(const Tensor& a) {
  const auto& A = node_of(a, "square_sum");
  double s = 0.0;
  for (double v : A->value) s += v * v;
  return make(1, 1, {s}, {A}, [](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += 2.0 * pa->value[i] * self.grad[0];
  });
}

Tensor l2norm_rows(const Tensor& a) {
  const auto& A = node_of(a, "l2norm_rows");
  std::vector<double> out(A->rows, 0.0);
  for (std::size_t r = 0; r < A->rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < A->cols; ++c) s += A->value[r * A->cols + c] * A->value[r * A->cols + c];
    out[r] = std::sqrt(s);
  }
  return make(A->rows, 1, std::move(out), {A}, [](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t r = 0; r < pa->rows; ++r) {
      const double n = self.value[r];
      if (n <= 0.0) continue;
      for (std::size_t c = 0; c < pa->cols; ++c)
        pa->grad[r * pa->cols + c] += self.grad[r] * pa->value[r * pa->cols + c] / n;
    }
  });
}

Tensor cosine_rows(const Tensor& a, const Tensor& b) {
  const auto& A = node_of(a, "cosine_rows");
  const auto& B = node_of(b, "cosine_rows");
  if (A->rows != B->rows || A->cols != B->cols) dim_error("cosine_rows", *A, *B);
  const std::size_t rows = A->rows, cols = A->cols;
  std::vector<double> out(rows, 0.0);
  // Cache norms and dots for the backward pass.
  std::vector<double> cache(rows * 3, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = A->value[r * cols + c], y = B->value[r * cols + c];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    cache[3 * r] = na;
    cache[3 * r + 1] = nb;
    out[r] = (na > 0.0 && nb > 0.0) ? dot / (na * nb) : 0.0;
  }
  return make(rows, 1, std::move(out), {A, B}, [cache = std::move(cache)](Node& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    const std::size_t cols = pa->cols;
    for (std::size_t r = 0; r < self.rows; ++r) {
      const double na = cache[3 * r], nb = cache[3 * r + 1];
      if (na <= 0.0 || nb <= 0.0) continue;
      const double cs = self.value[r], g = self.grad[r];
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = pa->value[r * cols + c], y = pb->value[r * cols + c];
        if (wants(pa)) pa->grad[r * cols + c] += g * (y / (na * nb) - cs * x / (na * na));
        if (wants(pb)) pb->grad[r * cols + c] += g * (x / (na * nb) - cs * y / (nb * nb));
      }
    }
  });
}

Tensor segment_normalize(const Tensor& x, std::span<const std::uint32_t> group,
                         std::size_t group_count) {
  const auto& X = node_of(x, "segment_normalize");
  if (X->cols != 1 || X->rows != group.size()) {
    fail(ErrorKind::Dimension, "segment_normalize: expected (" + std::to_string(group.size()) +
                                   "x1), got " + shape_of(*X));
  }
  std::vector<double> totals(group_count, 0.0);
  std::vector<std::size_t> counts(group_count, 0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] >= group_count) fail(ErrorKind::Dimension, "segment_normalize: group out of range");
    totals[group[i]] += X->value[i];
    ++counts[group[i]];
  }
  std::vector<double> out(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double t = totals[group[i]];
    out[i] = t > 0.0 ? X->value[i] / t : 1.0 / static_cast<double>(counts[group[i]]);
  }
  std::vector<std::uint32_t> g(group.begin(), group.end());
  return make(group.size(), 1, std::move(out), {X},
              [g = std::move(g), totals = std::move(totals)](Node& self) {
                auto& px = self.parents[0];
                // d y_i / d x_j = [i==j]/S - x_i/S^2 within a group.
                std::vector<double> weighted(totals.size(), 0.0);
                for (std::size_t i = 0; i < g.size(); ++i)
                  if (totals[g[i]] > 0.0) weighted[g[i]] += self.grad[i] * self.value[i];
                for (std::size_t j = 0; j < g.size(); ++j) {
                  const double s = totals[g[j]];
                  if (s <= 0.0) continue;
                  px->grad[j] += (self.grad[j] - weighted[g[j]]) / s;
                }
              });
}

Tensor pick(const Tensor& a, std::span<const std::uint32_t> index) {
  const auto& A = node_of(a, "pick");
  if (index.size() != A->rows) {
    fail(ErrorKind::Dimension, "pick: " + std::to_string(index.size()) + " indices for " +
                                   shape_of(*A));
  }
  std::vector<double> out(A->rows);
  for (std::size_t r = 0; r < A->rows; ++r) {
    if (index[r] >= A->cols) fail(ErrorKind::Dimension, "pick: column index out of range");
    out[r] = A->value[r * A->cols + index[r]];
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return make(A->rows, 1, std::move(out), {A}, [idx = std::move(idx)](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t r = 0; r < idx.size(); ++r) pa->grad[r * pa->cols + idx[r]] += self.grad[r];
  });
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    fail(ErrorKind::Config, "dropout: rate " + std::to_string(rate) + " outside [0,1)");
  }
  if (rate == 0.0) return a;
  const auto& A = node_of(a, "dropout");
  std::bernoulli_distribution keep(1.0 - rate);
  const double factor = 1.0 / (1.0 - rate);
  std::vector<double> mask(A->value.size());
  for (double& m : mask) m = keep(rng) ? factor : 0.0;
  std::vector<double> out(A->value);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make(A->rows, A->cols, std::move(out), {A}, [mask = std::move(mask)](Node& self) {
    auto& pa = self.parents[0];
    for (std::size_t i = 0; i < mask.size(); ++i) pa->grad[i] += self.grad[i] * mask[i];
  });
}

}  // namespace trustguard
