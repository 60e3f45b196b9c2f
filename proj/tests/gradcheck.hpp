#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "trustguard/tensor.hpp"

namespace testutil {

using trustguard::Tensor;

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = u(rng);
  return Tensor::from(rows, cols, std::move(v), requires_grad);
}

// Reduces any output to a scalar with fixed random weights so that every
// output entry contributes to the checked vector-Jacobian product.
inline Tensor weighted_sum(const Tensor& out, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Tensor w = random_tensor(out.rows(), out.cols(), rng, -1.0, 1.0, false);
  return trustguard::sum(trustguard::mul(out, w));
}

// Largest relative error ||analytic - numeric|| / (||analytic|| + ||numeric||)
// over all inputs, central differences with step h.
inline double gradcheck(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                        std::vector<Tensor> inputs, double h = 1e-5) {
  for (auto& t : inputs) t.zero_grad();
  Tensor y = f(inputs);
  y.backward();
  double worst = 0.0;
  for (auto& t : inputs) {
    if (!t.requires_grad()) continue;
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    std::vector<double> numeric(t.size());
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double keep = values[i];
      double plus, minus;
      {
        trustguard::NoGradGuard guard;
        values[i] = keep + h;
        plus = f(inputs).item();
        values[i] = keep - h;
        minus = f(inputs).item();
      }
      values[i] = keep;
      numeric[i] = (plus - minus) / (2 * h);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    if (denom > 1e-12) worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return worst;
}

}  // namespace testutil
