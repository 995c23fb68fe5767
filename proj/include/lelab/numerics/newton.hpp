#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "lelab/errors.hpp"
#include "lelab/numerics/banded.hpp"

namespace lelab {

inline double inf_norm(const std::vector<double>& v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

struct NewtonResult {
  std::vector<double> x;
  int iterations = 0;
  double residual_norm = 0.0;
};

struct NewtonOptions {
  int max_halvings = 20;
  // Applied to every trial iterate before its residual is evaluated; used by
  // the annulus solver to clip transient negative nodal values.
  std::function<void(std::vector<double>&)> project;
};

/// Damped Newton iteration: full step first, halved while the residual norm
/// would increase. Returns once the infinity norm of the residual falls
/// below tol.
inline NewtonResult newton_solve(
    const std::function<std::vector<double>(const std::vector<double>&)>& residual,
    const std::function<BandedMatrix(const std::vector<double>&)>& jacobian,
    std::vector<double> x0, double tol, int max_iter, const NewtonOptions& options = {}) {
  if (!(tol > 0.0)) fail(ErrorCode::invalid_range, "tol must be positive");

  std::vector<double> x = std::move(x0);
  if (options.project) options.project(x);
  std::vector<double> r = residual(x);
  double rn = inf_norm(r);

  for (int iter = 0; iter < max_iter; ++iter) {
    if (rn <= tol) return {std::move(x), iter, rn};

    std::vector<double> neg_r(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) neg_r[i] = -r[i];
    const std::vector<double> step = solve_banded_linear(jacobian(x), std::move(neg_r));

    double lambda = 1.0;
    std::vector<double> x_best, r_best;
    double rn_best = std::numeric_limits<double>::infinity();
    for (int halving = 0; halving <= options.max_halvings; ++halving) {
      std::vector<double> x_try(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) x_try[i] = x[i] + lambda * step[i];
      if (options.project) options.project(x_try);
      std::vector<double> r_try = residual(x_try);
      const double rn_try = inf_norm(r_try);
      if (rn_try < rn_best) {
        rn_best = rn_try;
        x_best = std::move(x_try);
        r_best = std::move(r_try);
      }
      if (rn_best < rn) break;
      lambda *= 0.5;
    }
    x = std::move(x_best);
    r = std::move(r_best);
    rn = rn_best;
  }
  if (rn <= tol) return {std::move(x), max_iter, rn};
  fail(ErrorCode::no_convergence, "residual " + std::to_string(rn) + " above tol " +
                                      std::to_string(tol) + " after " + std::to_string(max_iter) +
                                      " iterations");
}

}  // namespace lelab
