#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lelab/errors.hpp"

namespace lelab {

/// Square banded matrix with kl sub- and ku super-diagonals.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
      : n_(n), kl_(kl), ku_(ku), data_((kl + ku + 1) * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t lower_bandwidth() const noexcept { return kl_; }
  std::size_t upper_bandwidth() const noexcept { return ku_; }

  bool in_band(std::size_t i, std::size_t j) const noexcept {
    return (j <= i + ku_) && (i <= j + kl_);
  }

  double& at(std::size_t i, std::size_t j) { return data_[index(i, j)]; }

  double get(std::size_t i, std::size_t j) const {
    return in_band(i, j) ? data_[index(i, j)] : 0.0;
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = (i >= kl_) ? i - kl_ : 0;
      const std::size_t j1 = std::min(n_ - 1, i + ku_);
      double acc = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) acc += data_[index(i, j)] * x[j];
      y[i] = acc;
    }
    return y;
  }

  double inf_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = (i >= kl_) ? i - kl_ : 0;
      const std::size_t j1 = std::min(n_ - 1, i + ku_);
      double row = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) row += std::abs(data_[index(i, j)]);
      best = std::max(best, row);
    }
    return best;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    return (i - j + ku_) + j * (kl_ + ku_ + 1);
  }

  std::size_t n_ = 0;
  std::size_t kl_ = 0;
  std::size_t ku_ = 0;
  std::vector<double> data_;
};

/// Gaussian elimination with partial pivoting in LAPACK-style band storage.
/// Pivoting can fill up to kl extra superdiagonals, hence the widened work array.
inline std::vector<double> solve_banded_linear(const BandedMatrix& A, std::vector<double> rhs) {
  const std::size_t n = A.size();
  if (rhs.size() != n) fail(ErrorCode::invalid_range, "rhs length does not match matrix size");
  if (n == 0) return {};
  const std::size_t kl = A.lower_bandwidth();
  const std::size_t ku = A.upper_bandwidth();
  if (kl > 5 || ku > 5) fail(ErrorCode::invalid_range, "bandwidth exceeds 5");

  const std::size_t kw = kl + ku;  // widened upper bandwidth after pivoting
  const std::size_t ldw = kl + kw + 1;
  std::vector<double> w(ldw * n, 0.0);
  auto idx = [&](std::size_t i, std::size_t j) { return (i - j + kw) + j * ldw; };

  std::vector<double> scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = (i >= kl) ? i - kl : 0;
    const std::size_t j1 = std::min(n - 1, i + ku);
    for (std::size_t j = j0; j <= j1; ++j) {
      const double v = A.get(i, j);
      w[idx(i, j)] = v;
      scale[i] = std::max(scale[i], std::abs(v));
    }
  }

  // Row equilibration: radial flux-form assemblies carry r^{N-1} weights that
  // span dozens of orders of magnitude, and unscaled partial pivoting then
  // picks rows that wreck the small-radius components of the solution.
  for (std::size_t i = 0; i < n; ++i) {
    if (scale[i] == 0.0)
      fail(ErrorCode::singular_matrix, "row " + std::to_string(i) + " is identically zero");
    const std::size_t j0 = (i >= kl) ? i - kl : 0;
    const std::size_t j1 = std::min(n - 1, i + ku);
    for (std::size_t j = j0; j <= j1; ++j) w[idx(i, j)] /= scale[i];
    rhs[i] /= scale[i];
  }

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t last_row = std::min(n - 1, k + kl);
    std::size_t p = k;
    for (std::size_t i = k + 1; i <= last_row; ++i)
      if (std::abs(w[idx(i, k)]) > std::abs(w[idx(p, k)])) p = i;

    const double pivot = w[idx(p, k)];
    if (std::abs(pivot) < 1e-14 || pivot == 0.0)
      fail(ErrorCode::singular_matrix, "pivot underflow at column " + std::to_string(k));

    if (p != k) {
      const std::size_t j1 = std::min(n - 1, k + kw);
      for (std::size_t j = k; j <= j1; ++j) std::swap(w[idx(k, j)], w[idx(p, j)]);
      std::swap(rhs[k], rhs[p]);
    }

    const std::size_t j1 = std::min(n - 1, k + kw);
    for (std::size_t i = k + 1; i <= last_row; ++i) {
      const double m = w[idx(i, k)] / w[idx(k, k)];
      if (m == 0.0) continue;
      for (std::size_t j = k + 1; j <= j1; ++j) w[idx(i, j)] -= m * w[idx(k, j)];
      rhs[i] -= m * rhs[k];
    }
  }

  std::vector<double> x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t j1 = std::min(n - 1, ii + kw);
    double acc = rhs[ii];
    for (std::size_t j = ii + 1; j <= j1; ++j) acc -= w[idx(ii, j)] * x[j];
    x[ii] = acc / w[idx(ii, ii)];
  }
  return x;
}

}  // namespace lelab
