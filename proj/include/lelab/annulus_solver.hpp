#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "lelab/ansatz.hpp"
#include "lelab/errors.hpp"
#include "lelab/ground_state.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

/// Converged nonlinear solution of the system on the radial annulus.
struct SolveResult {
  CriticalPair pair;
  double epsilon = 0.0;
  AnnulusMesh mesh;
  std::vector<double> u, v;
  double sup_u = 0.0, sup_v = 0.0;
  double argmax_r = 0.0;
  int newton_iters = 0;
  double residual_norm = 0.0;
  double energy = 0.0;
};

namespace detail {

// Energy I_eps(u, v) of nodal profiles: flux pairing for the cross term,
// Simpson quadrature for the power terms.
inline double annulus_energy(const CriticalPair& pair, const RadialFv& fv,
                             const std::vector<double>& u, const std::vector<double>& v) {
  const auto& grid = fv.grid();
  std::vector<double> w(grid.size());
  double energy = fv.dirichlet_energy(u, v);
  for (std::size_t i = 0; i < grid.size(); ++i)
    w[i] = std::pow(std::abs(v[i]), pair.p + 1.0);
  energy -= integrate_radial(grid, w, pair.N) / (pair.p + 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    w[i] = std::pow(std::abs(u[i]), pair.q + 1.0);
  energy -= integrate_radial(grid, w, pair.N) / (pair.q + 1.0);
  return energy;
}

}  // namespace detail

/// Damped Newton solve of the coupled radial system
///   -Delta u = |v|^{p-1} v,  -Delta v = |u|^{q-1} u,  u = v = 0 on both ends,
/// from a supplied nonnegative initializer. Transient negative nodal values
/// are clipped between iterations; the converged point is checked to be an
/// unclipped nonnegative fixed point.
inline SolveResult solve_system(const CriticalPair& pair, double epsilon, const AnnulusMesh& mesh,
                                const std::vector<double>& u_init,
                                const std::vector<double>& v_init, double tol = 1e-9,
                                int max_iter = 40) {
  const std::size_t n = mesh.grid->size();
  if (u_init.size() != n || v_init.size() != n)
    fail(ErrorCode::invalid_range, "initializer does not match mesh");
  if (u_init.front() != 0.0 || u_init.back() != 0.0 || v_init.front() != 0.0 ||
      v_init.back() != 0.0)
    fail(ErrorCode::invalid_range, "initializer must vanish on both boundaries");
  for (std::size_t i = 0; i < n; ++i)
    if (u_init[i] < 0.0 || v_init[i] < 0.0)
      fail(ErrorCode::invalid_range, "initializer must be nonnegative");

  const RadialFv fv(mesh.grid, pair.N);
  const std::size_t m = n - 2;
  const BandedMatrix A = fv.matrix();

  // Scaled units for the residual: cell volume times the source sup, plus a
  // small flux-row allowance. The first term makes the tolerance mean
  // "pointwise defect relative to the source magnitude"; the second keeps the
  // criterion attainable in double precision, where flux cancellation floors
  // the raw pointwise residual at macheps/h^2 on fine meshes. Frozen from the
  // initializer so the Newton path sees a fixed scaling.
  constexpr double kNoiseAllowance = 1e-6;
  double s_u = 0.0, s_v = 0.0, sup_u0 = 0.0, sup_v0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s_u = std::max(s_u, std::pow(std::abs(v_init[i]), pair.p));
    s_v = std::max(s_v, std::pow(std::abs(u_init[i]), pair.q));
    sup_u0 = std::max(sup_u0, u_init[i]);
    sup_v0 = std::max(sup_v0, v_init[i]);
  }
  if (s_u == 0.0 || s_v == 0.0)
    fail(ErrorCode::converged_to_zero, "initializer is identically zero");
  std::vector<double> Du(m), Dv(m);
  for (std::size_t k = 0; k < m; ++k) {
    double rowabs = std::abs(A.get(k, k));
    if (k > 0) rowabs += std::abs(A.get(k, k - 1));
    if (k + 1 < m) rowabs += std::abs(A.get(k, k + 1));
    const double vol = fv.cell_volume(k + 1);
    Du[k] = vol * s_u + kNoiseAllowance * rowabs * sup_u0;
    Dv[k] = vol * s_v + kNoiseAllowance * rowabs * sup_v0;
  }

  auto residual = [&](const std::vector<double>& z) {
    std::vector<double> ui(m), vi(m);
    for (std::size_t k = 0; k < m; ++k) {
      ui[k] = z[2 * k];
      vi[k] = z[2 * k + 1];
    }
    std::vector<double> res(2 * m, 0.0);
    auto lap = [&](const std::vector<double>& w, std::size_t k) {
      double acc = A.get(k, k) * w[k];
      if (k > 0) acc += A.get(k, k - 1) * w[k - 1];
      if (k + 1 < m) acc += A.get(k, k + 1) * w[k + 1];
      return acc;
    };
    for (std::size_t k = 0; k < m; ++k) {
      const double vol = fv.cell_volume(k + 1);
      res[2 * k] = (lap(ui, k) - vol * sgn_pow(vi[k], pair.p)) / Du[k];
      res[2 * k + 1] = (lap(vi, k) - vol * sgn_pow(ui[k], pair.q)) / Dv[k];
    }
    return res;
  };

  auto jacobian = [&](const std::vector<double>& z) {
    BandedMatrix J(2 * m, 2, 2);
    for (std::size_t k = 0; k < m; ++k) {
      const double vol = fv.cell_volume(k + 1);
      const double u_k = z[2 * k];
      const double v_k = z[2 * k + 1];
      J.at(2 * k, 2 * k) = A.get(k, k) / Du[k];
      J.at(2 * k + 1, 2 * k + 1) = A.get(k, k) / Dv[k];
      if (k > 0) {
        J.at(2 * k, 2 * k - 2) = A.get(k, k - 1) / Du[k];
        J.at(2 * k + 1, 2 * k - 1) = A.get(k, k - 1) / Dv[k];
      }
      if (k + 1 < m) {
        J.at(2 * k, 2 * k + 2) = A.get(k, k + 1) / Du[k];
        J.at(2 * k + 1, 2 * k + 3) = A.get(k, k + 1) / Dv[k];
      }
      J.at(2 * k, 2 * k + 1) = -vol * pair.p * std::pow(std::abs(v_k), pair.p - 1.0) / Du[k];
      J.at(2 * k + 1, 2 * k) = -vol * pair.q * std::pow(std::abs(u_k), pair.q - 1.0) / Dv[k];
    }
    return J;
  };

  NewtonOptions opt;
  opt.project = [](std::vector<double>& z) {
    for (double& w : z)
      if (w < 0.0) w = 0.0;
  };

  std::vector<double> z0(2 * m);
  for (std::size_t k = 0; k < m; ++k) {
    z0[2 * k] = u_init[k + 1];
    z0[2 * k + 1] = v_init[k + 1];
  }
  NewtonResult nr = newton_solve(residual, jacobian, std::move(z0), tol, max_iter, opt);

  SolveResult out{pair, epsilon, mesh, {}, {}, 0, 0, 0, nr.iterations, nr.residual_norm, 0};
  out.u.assign(n, 0.0);
  out.v.assign(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    out.u[k + 1] = nr.x[2 * k];
    out.v[k + 1] = nr.x[2 * k + 1];
  }
  // The clip must be inactive at the fixed point.
  const double unclipped = inf_norm(residual(nr.x));
  if (unclipped > tol) fail(ErrorCode::no_convergence, "converged point is clipped");

  std::size_t arg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.u[i] > out.sup_u) {
      out.sup_u = out.u[i];
      arg = i;
    }
    out.sup_v = std::max(out.sup_v, out.v[i]);
  }
  out.argmax_r = mesh.grid->nodes[arg];
  if (out.sup_u < 1e-8)
    fail(ErrorCode::converged_to_zero, "trivial solution; initializer was too weak");
  out.energy = detail::annulus_energy(pair, fv, out.u, out.v);
  return out;
}

struct SweepFailure {
  double epsilon = 0.0;
  std::string message;
};

/// Continuation family over a decreasing list of hole radii.
struct SweepReport {
  std::vector<SolveResult> results;
  std::vector<SweepFailure> failures;
  PowerLawFit rate_fit;    // sup_u vs eps
  PowerLawFit energy_fit;  // (energy - c0) vs eps
  double c0 = 0.0;
  double d_init = 0.0;
};

struct SweepOptions {
  double nodes_per_log = 1800.0;  // mesh density: n = nodes_per_log * ln(1/eps)
  std::size_t min_nodes = 6000;
  double newton_tol = 1e-9;
  int max_iter = 40;
  double delta = 0.05;  // admissible-set parameter for the initial projection
};

/// Warm-started Newton continuation: the first point starts from the
/// projected bubble, later points from the previous solution rescaled by the
/// predicted concentration ratio (eps_next/eps_prev)^alpha.
inline SweepReport continuation_sweep(const GroundState& gs, const std::vector<double>& eps_list,
                                      double d_init, const SweepOptions& opt = {}) {
  if (eps_list.empty()) fail(ErrorCode::invalid_range, "empty eps list");
  if (!(eps_list.front() <= 1e-1))
    fail(ErrorCode::invalid_range, "first epsilon must be at most 0.1");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      fail(ErrorCode::invalid_range, "eps_list must be decreasing");
  if (!(d_init > 0.0)) fail(ErrorCode::invalid_range, "d_init must be positive");

  const CriticalPair& pair = gs.pair;
  SweepReport report;
  report.d_init = d_init;
  report.c0 = (2.0 / pair.N) * moment_integrals(gs).int_U_q1;

  auto mesh_for = [&](double eps) {
    const std::size_t n = std::max<std::size_t>(
        opt.min_nodes, static_cast<std::size_t>(opt.nodes_per_log * std::log(1.0 / eps)));
    return make_annulus_mesh(PuncturedBall(eps, pair.N), n);
  };

  const SolveResult* prev = nullptr;
  for (double eps : eps_list) {
    const AnnulusMesh mesh = mesh_for(eps);
    const auto& r = mesh.grid->nodes;
    std::vector<double> u0(r.size(), 0.0), v0(r.size(), 0.0);
    if (prev == nullptr) {
      const BubbleParams params = make_bubble_params(pair, eps, d_init, {}, opt.delta);
      const ProjectedBubble pb = project_bubble(gs, params, mesh);
      u0 = pb.PcalU;
      v0 = pb.PV;
    } else {
      // Rescale the previous solution by the predicted mu-ratio.
      const double rho = std::pow(eps / prev->epsilon, pair.alpha);
      const auto& pr = prev->mesh.grid->nodes;
      auto interp_prev = [&](const std::vector<double>& w, double rr) {
        const double rc = std::clamp(rr, pr.front(), pr.back());
        const std::size_t i = prev->mesh.grid->locate(rc);
        const double t = (rc - pr[i]) / (pr[i + 1] - pr[i]);
        return (1.0 - t) * w[i] + t * w[i + 1];
      };
      for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        u0[i] = std::max(0.0, std::pow(rho, -pair.amp_u()) * interp_prev(prev->u, r[i] / rho));
        v0[i] = std::max(0.0, std::pow(rho, -pair.amp_v()) * interp_prev(prev->v, r[i] / rho));
      }
    }
    try {
      report.results.push_back(
          solve_system(pair, eps, mesh, u0, v0, opt.newton_tol, opt.max_iter));
      prev = &report.results.back();
    } catch (const Error& e) {
      report.failures.push_back({eps, e.what()});
      prev = nullptr;  // restart from the ansatz at the next point
    }
  }

  if (report.results.size() >= 3) {
    std::vector<std::pair<double, double>> rate_pts, energy_pts;
    for (const SolveResult& sr : report.results) {
      rate_pts.emplace_back(sr.epsilon, sr.sup_u);
      if (sr.energy > report.c0) energy_pts.emplace_back(sr.epsilon, sr.energy - report.c0);
    }
    report.rate_fit = fit_power_law(rate_pts);
    if (energy_pts.size() >= 3) report.energy_fit = fit_power_law(energy_pts);
  } else {
    fail(ErrorCode::no_convergence,
         "continuation produced fewer than 3 converged points (first failure at eps = " +
             (report.failures.empty() ? std::string("?")
                                      : std::to_string(report.failures.front().epsilon)) +
             ")");
  }
  return report;
}

/// Least-squares match of a solved profile against the scaled ground state on
/// [eps, 1/2]: returns the best-fit concentration scale and the relative
/// weighted L2 distance.
struct SimilarityResult {
  double mu_best = 0.0;
  double rel_distance = 0.0;
  double d_equivalent = 0.0;  // mu_best / eps^alpha
};

inline SimilarityResult profile_similarity(const SolveResult& sr, const GroundState& gs) {
  const auto& r = sr.mesh.grid->nodes;
  const int N = sr.pair.N;
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i] <= 0.5) window.push_back(i);

  auto distance2 = [&](double mu) {
    const double amp = std::pow(mu, -gs.pair.amp_u());
    double num = 0.0, den = 0.0;
    for (std::size_t i : window) {
      const double model = amp * gs.u_at(r[i] / mu);
      const double w = std::pow(r[i], N - 1);
      num += w * (sr.u[i] - model) * (sr.u[i] - model);
      den += w * model * model;
    }
    return num / den;
  };

  // Golden-section search on ln(mu) around the predicted scale.
  const double mu_pred = std::pow(sr.epsilon, gs.pair.alpha);
  double lo = std::log(mu_pred / 8.0), hi = std::log(mu_pred * 8.0);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = distance2(std::exp(x1)), f2 = distance2(std::exp(x2));
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = distance2(std::exp(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = distance2(std::exp(x2));
    }
  }
  SimilarityResult out;
  out.mu_best = std::exp(0.5 * (lo + hi));
  out.rel_distance = std::sqrt(distance2(out.mu_best));
  out.d_equivalent = out.mu_best / mu_pred;
  return out;
}

inline void write_sweep_csv(const SweepReport& report, const GroundState& gs, std::ostream& os) {
  os << "eps,sup_u,sup_v,argmax_r,mu_best,newton_iters,residual_norm,energy\n";
  os.precision(17);
  for (const SolveResult& sr : report.results) {
    const SimilarityResult sim = profile_similarity(sr, gs);
    os << sr.epsilon << ',' << sr.sup_u << ',' << sr.sup_v << ',' << sr.argmax_r << ','
       << sim.mu_best << ',' << sr.newton_iters << ',' << sr.residual_norm << ',' << sr.energy
       << '\n';
  }
}

}  // namespace lelab
