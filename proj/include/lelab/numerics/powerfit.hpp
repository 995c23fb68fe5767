#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lelab/errors.hpp"

namespace lelab {

/// Least-squares fit of ln y = prefactor_log + exponent * ln x.
struct PowerLawFit {
  double exponent = 0.0;
  double prefactor_log = 0.0;
  double rms_residual = 0.0;

  double eval(double x) const { return std::exp(prefactor_log + exponent * std::log(x)); }
};

inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points,
                                 std::size_t begin, std::size_t end) {
  if (end > points.size() || begin >= end)
    fail(ErrorCode::degenerate_window, "empty or out-of-range window");
  const std::size_t m = end - begin;
  if (m < 3) fail(ErrorCode::degenerate_window, "need at least 3 points, got " + std::to_string(m));

  std::vector<double> lx(m), ly(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& [x, y] = points[begin + k];
    if (!(x > 0.0) || !(y > 0.0))
      fail(ErrorCode::invalid_range, "power-law fit needs positive coordinates");
    lx[k] = std::log(x);
    ly[k] = std::log(y);
  }

  double sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sx += lx[k];
    sy += ly[k];
  }
  const double mx = sx / static_cast<double>(m);
  const double my = sy / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (sxx == 0.0) fail(ErrorCode::degenerate_window, "all abscissae equal");

  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  fit.prefactor_log = my - fit.exponent * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double res = ly[k] - (fit.prefactor_log + fit.exponent * lx[k]);
    ss += res * res;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(m));
  return fit;
}

inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  return fit_power_law(points, 0, points.size());
}

}  // namespace lelab
