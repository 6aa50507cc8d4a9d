#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <doctest.h>

#include "dreamcc/rng.hpp"
#include "dreamcc/tensor.hpp"

namespace dreamcc::testing {

inline Tensor random_leaf(Shape shape, Rng& rng, double scale = 1.0,
                          DType dt = DType::kF64, bool requires_grad = true) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = normal(rng);
  return Tensor::from_vector(std::move(shape), v, dt, requires_grad);
}

// Central-difference derivative of eval() wrt entry idx of leaf x.
inline double fd_derivative(const std::function<double()>& eval, Tensor x, int64_t idx,
                            double eps) {
  const double orig = x.at(idx);
  x.set_at(idx, orig + eps);
  const double up = eval();
  x.set_at(idx, orig - eps);
  const double down = eval();
  x.set_at(idx, orig);
  return (up - down) / (2.0 * eps);
}

// Checks the analytic gradient of build() (a scalar graph over the given f64
// leaves) against central finite differences, entry by entry.
inline void check_gradients(const std::function<Tensor()>& build,
                            const std::vector<Tensor>& leaves, double tol = 1e-6,
                            double eps = 1e-5) {
  for (const Tensor& leaf : leaves) {
    Tensor copy = leaf;
    copy.zero_grad();
  }
  Tensor loss = build();
  REQUIRE(loss.size() == 1);
  backward(loss);
  auto eval = [&]() { return build().item(); };
  for (size_t li = 0; li < leaves.size(); ++li) {
    const Tensor& leaf = leaves[li];
    Tensor g = leaf.grad();
    REQUIRE_MESSAGE(g.defined(), "no gradient reached leaf ", li);
    for (int64_t i = 0; i < leaf.size(); ++i) {
      const double analytic = g.at(i);
      const double numeric = fd_derivative(eval, leaf, i, eps);
      const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      const double rel = std::abs(analytic - numeric) / denom;
      CHECK_MESSAGE(rel < tol, "leaf ", li, " entry ", i, ": analytic ", analytic, " numeric ",
                    numeric, " rel ", rel);
    }
  }
}

// Same contract as check_gradients, but finite-differences only a random
// subset of entries per leaf (large models make per-entry FD quadratic).
inline void check_gradients_sampled(const std::function<Tensor()>& build,
                                    const std::vector<Tensor>& leaves, double tol, double eps,
                                    int max_per_leaf, Rng& pick_rng) {
  for (const Tensor& leaf : leaves) {
    Tensor copy = leaf;
    copy.zero_grad();
  }
  Tensor loss = build();
  REQUIRE(loss.size() == 1);
  backward(loss);
  auto eval = [&]() { return build().item(); };
  for (size_t li = 0; li < leaves.size(); ++li) {
    const Tensor& leaf = leaves[li];
    Tensor g = leaf.grad();
    REQUIRE_MESSAGE(g.defined(), "no gradient reached leaf ", li);
    std::vector<int64_t> idx(static_cast<size_t>(leaf.size()));
    for (int64_t i = 0; i < leaf.size(); ++i) idx[static_cast<size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), pick_rng);
    const size_t n = std::min<size_t>(idx.size(), static_cast<size_t>(max_per_leaf));
    for (size_t k = 0; k < n; ++k) {
      const int64_t i = idx[k];
      const double analytic = g.at(i);
      const double numeric = fd_derivative(eval, leaf, i, eps);
      const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      const double rel = std::abs(analytic - numeric) / denom;
      CHECK_MESSAGE(rel < tol, "leaf ", li, " entry ", i, ": analytic ", analytic, " numeric ",
                    numeric, " rel ", rel);
    }
  }
}

inline bool close(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace dreamcc::testing
