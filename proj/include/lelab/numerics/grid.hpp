#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lelab/errors.hpp"

namespace lelab {

enum class GridKind { uniform, geometric, piecewise };

constexpr const char* to_string(GridKind kind) noexcept {
  switch (kind) {
    case GridKind::uniform: return "uniform";
    case GridKind::geometric: return "geometric";
    case GridKind::piecewise: return "piecewise";
  }
  return "unknown";
}

/// Strictly increasing radii spanning [r_min, r_max].
struct RadialGrid {
  std::vector<double> nodes;
  GridKind kind = GridKind::uniform;
  double r_min = 0.0;
  double r_max = 0.0;

  std::size_t size() const noexcept { return nodes.size(); }
  double operator[](std::size_t i) const noexcept { return nodes[i]; }

  // Index of the last node <= r (nodes.front() if r underflows the grid).
  std::size_t locate(double r) const noexcept {
    if (r <= nodes.front()) return 0;
    if (r >= nodes.back()) return nodes.size() - 2;
    std::size_t lo = 0, hi = nodes.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (nodes[mid] <= r ? lo : hi) = mid;
    }
    return lo;
  }
};

inline RadialGrid build_grid(double r_min, double r_max, std::size_t n, GridKind kind) {
  if (!(r_min >= 0.0) || !(r_min < r_max))
    fail(ErrorCode::invalid_range, "need 0 <= r_min < r_max, got [" + std::to_string(r_min) +
                                       ", " + std::to_string(r_max) + "]");
  if (n < 8) fail(ErrorCode::invalid_range, "need at least 8 nodes, got " + std::to_string(n));
  if (kind == GridKind::geometric && r_min <= 0.0)
    fail(ErrorCode::invalid_range, "geometric grid needs r_min > 0");

  RadialGrid grid;
  grid.kind = kind;
  grid.r_min = r_min;
  grid.r_max = r_max;
  grid.nodes.resize(n);
  if (kind == GridKind::uniform) {
    const double h = (r_max - r_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) grid.nodes[i] = r_min + h * static_cast<double>(i);
  } else {
    const double lr = std::log(r_max / r_min);
    for (std::size_t i = 0; i < n; ++i)
      grid.nodes[i] = r_min * std::exp(lr * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  grid.nodes.front() = r_min;
  grid.nodes.back() = r_max;
  return grid;
}

// Uniform on [0, r_break], geometric on [r_break, r_max]; used by the radial
// ODE integrator which needs fine absolute resolution near the origin and
// fine relative resolution in the far field.
inline RadialGrid build_split_grid(double r_break, double r_max, std::size_t n_inner,
                                   std::size_t n_outer) {
  RadialGrid inner = build_grid(0.0, r_break, n_inner, GridKind::uniform);
  RadialGrid outer = build_grid(r_break, r_max, n_outer, GridKind::geometric);
  RadialGrid grid;
  grid.kind = GridKind::piecewise;
  grid.r_min = 0.0;
  grid.r_max = r_max;
  grid.nodes = std::move(inner.nodes);
  grid.nodes.insert(grid.nodes.end(), outer.nodes.begin() + 1, outer.nodes.end());
  return grid;
}

}  // namespace lelab
