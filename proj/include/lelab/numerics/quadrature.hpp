#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lelab/errors.hpp"
#include "lelab/numerics/grid.hpp"

namespace lelab {

/// Surface area of the unit sphere S^{N-1} in R^N.
inline double sphere_area(int N) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

namespace detail {

// Weights for one Simpson pair over intervals (h0, h1). All three weights are
// positive whenever the adjacent ratio stays below 2, which holds on uniform
// and geometric grids; the quadrature then remains monotone in f.
inline void simpson_pair_weights(double h0, double h1, double w[3]) {
  const double s = h0 + h1;
  w[0] = s * (2.0 * h0 - h1) / (6.0 * h0);
  w[1] = s * s * s / (6.0 * h0 * h1);
  w[2] = s * (2.0 * h1 - h0) / (6.0 * h1);
}

// Composite quadrature weights on arbitrary strictly increasing nodes:
// Simpson pairs where the local mesh ratio allows positive weights,
// trapezoid fallback otherwise (and for a trailing odd interval).
inline std::vector<double> composite_weights(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 0.0);
  std::size_t i = 0;
  while (i + 2 < n) {
    const double h0 = x[i + 1] - x[i];
    const double h1 = x[i + 2] - x[i + 1];
    const double ratio = h1 / h0;
    if (ratio < 2.0 && ratio > 0.5) {
      double s[3];
      simpson_pair_weights(h0, h1, s);
      w[i] += s[0];
      w[i + 1] += s[1];
      w[i + 2] += s[2];
      i += 2;
    } else {
      w[i] += 0.5 * h0;
      w[i + 1] += 0.5 * h0;
      i += 1;
    }
  }
  if (i + 1 < n) {
    const double h = x[i + 1] - x[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

}  // namespace detail

/// Quadrature of g over the grid's radii (no volume factor).
inline double integrate_samples(const RadialGrid& grid, std::span<const double> g) {
  if (g.size() != grid.size())
    fail(ErrorCode::invalid_range, "sample count does not match grid size");
  const std::vector<double> w = detail::composite_weights(grid.nodes);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) acc += w[i] * g[i];
  return acc;
}

/// Volume integral |S^{N-1}| * int f(r) r^{N-1} dr over the grid, with an
/// optional analytic tail beyond r_max assuming f(r) ~ f(r_max) (r/r_max)^{-tail_order}.
inline double integrate_radial(const RadialGrid& grid, std::span<const double> f, int N,
                               double tail_order = 0.0) {
  if (f.size() != grid.size())
    fail(ErrorCode::invalid_range, "sample count does not match grid size");
  for (double v : f)
    if (!std::isfinite(v)) fail(ErrorCode::invalid_range, "non-finite sample");

  const std::vector<double> w = detail::composite_weights(grid.nodes);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = grid.nodes[i];
    acc += w[i] * f[i] * std::pow(r, N - 1);
  }
  if (tail_order != 0.0) {
    if (tail_order <= static_cast<double>(N))
      fail(ErrorCode::nonconvergent_tail,
           "tail_order " + std::to_string(tail_order) + " must exceed dimension " +
               std::to_string(N));
    // int_{r_max}^inf f(r_max) (r/r_max)^{-t} r^{N-1} dr = f(r_max) r_max^N / (t - N)
    acc += f.back() * std::pow(grid.r_max, N) / (tail_order - static_cast<double>(N));
  }
  return sphere_area(N) * acc;
}

}  // namespace lelab
