#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "lelab/errors.hpp"
#include "lelab/numerics/grid.hpp"

namespace lelab {

/// Piecewise cubic Hermite interpolant on a RadialGrid. Slopes are supplied
/// by the caller (the ODE integrator knows the exact derivatives) and passed
/// through a Fritsch-Carlson limiter so the interpolant stays monotone on
/// monotone data.
class HermiteSpline {
 public:
  HermiteSpline() = default;
  HermiteSpline(std::shared_ptr<const RadialGrid> grid, std::vector<double> values,
                std::vector<double> slopes)
      : grid_(std::move(grid)), y_(std::move(values)), m_(std::move(slopes)) {
    if (y_.size() != grid_->size() || m_.size() != grid_->size())
      fail(ErrorCode::invalid_range, "interpolant data does not match grid");
    limit_slopes();
  }

  double eval(double r) const {
    const std::size_t i = grid_->locate(r);
    const double x0 = grid_->nodes[i], x1 = grid_->nodes[i + 1];
    const double h = x1 - x0;
    const double t = (r - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y_[i] + (t3 - 2.0 * t2 + t) * h * m_[i] +
           (-2.0 * t3 + 3.0 * t2) * y_[i + 1] + (t3 - t2) * h * m_[i + 1];
  }

  double deriv(double r) const {
    const std::size_t i = grid_->locate(r);
    const double x0 = grid_->nodes[i], x1 = grid_->nodes[i + 1];
    const double h = x1 - x0;
    const double t = (r - x0) / h;
    const double t2 = t * t;
    return ((6.0 * t2 - 6.0 * t) * (y_[i] - y_[i + 1])) / h +
           (3.0 * t2 - 4.0 * t + 1.0) * m_[i] + (3.0 * t2 - 2.0 * t) * m_[i + 1];
  }

  const RadialGrid& grid() const { return *grid_; }
  const std::vector<double>& values() const { return y_; }
  const std::vector<double>& slopes() const { return m_; }

 private:
  void limit_slopes() {
    for (std::size_t i = 0; i + 1 < y_.size(); ++i) {
      const double h = grid_->nodes[i + 1] - grid_->nodes[i];
      const double delta = (y_[i + 1] - y_[i]) / h;
      if (delta == 0.0) {
        m_[i] = 0.0;
        m_[i + 1] = 0.0;
        continue;
      }
      const double a = m_[i] / delta;
      const double b = m_[i + 1] / delta;
      if (a < 0.0) m_[i] = 0.0;
      if (b < 0.0) m_[i + 1] = 0.0;
      if (a > 3.0) m_[i] = 3.0 * delta;
      if (b > 3.0) m_[i + 1] = 3.0 * delta;
    }
  }

  std::shared_ptr<const RadialGrid> grid_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace lelab
