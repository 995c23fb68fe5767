#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "lelab/errors.hpp"

namespace lelab {

// Small dense solve with partial pivoting; row-major A of size n*n. Only used
// for tiny systems (landscape Newton, modal coefficients), so no blocking.
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(A[i * n + k]) > std::abs(A[p * n + k])) p = i;
    if (A[p * n + k] == 0.0) fail(ErrorCode::singular_matrix, "dense pivot is zero");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A[k * n + j], A[p * n + j]);
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = A[i * n + k] / A[k * n + k];
      if (m == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) A[i * n + j] -= m * A[k * n + j];
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) acc -= A[ii * n + j] * x[j];
    x[ii] = acc / A[ii * n + ii];
  }
  return x;
}

}  // namespace lelab
