#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lelab/errors.hpp"
#include "lelab/greens.hpp"
#include "lelab/ground_state.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

/// Radial section of the punctured ball: a geometric grid spanning [eps, 1].
/// Log-uniform spacing resolves both the hole scale eps and the bubble scale
/// mu with the same relative truncation.
struct AnnulusMesh {
  PuncturedBall pb;
  std::shared_ptr<const RadialGrid> grid;

  int dim() const { return pb.N; }
  std::size_t nodes_below(double r) const {
    std::size_t count = 0;
    for (double node : grid->nodes)
      if (node <= r) ++count;
    return count;
  }
};

inline AnnulusMesh make_annulus_mesh(const PuncturedBall& pb, std::size_t n) {
  return {pb, std::make_shared<RadialGrid>(build_grid(pb.epsilon, 1.0, n, GridKind::geometric))};
}

/// Concentration parameters (d, tau) with their derived scales
/// mu = eps^alpha d and xi = mu tau, restricted to the admissible box.
struct BubbleParams {
  double d = 1.0;
  std::vector<double> tau;
  double epsilon = 0.0;
  double mu = 0.0;
  std::vector<double> xi;
  double delta = 0.1;
};

inline BubbleParams make_bubble_params(const CriticalPair& pair, double epsilon, double d,
                                       std::vector<double> tau, double delta = 0.1) {
  if (!(delta > 0.0) || !(delta < 1.0)) fail(ErrorCode::invalid_range, "delta must be in (0,1)");
  if (!(d >= delta) || !(d <= 1.0 / delta))
    fail(ErrorCode::invalid_range, "d outside the admissible interval [delta, 1/delta]");
  if (tau.empty()) tau.assign(pair.N, 0.0);
  if (static_cast<int>(tau.size()) != pair.N)
    fail(ErrorCode::invalid_range, "tau dimension mismatch");
  if (norm(tau) > 1.0 / delta) fail(ErrorCode::invalid_range, "|tau| exceeds 1/delta");
  BubbleParams bp;
  bp.d = d;
  bp.tau = std::move(tau);
  bp.epsilon = epsilon;
  bp.delta = delta;
  bp.mu = std::pow(epsilon, pair.alpha) * d;
  bp.xi.resize(pair.N);
  for (int i = 0; i < pair.N; ++i) bp.xi[i] = bp.mu * bp.tau[i];
  return bp;
}

/// Finite-volume discretization of -(r^{N-1} u')' = r^{N-1} f on the annulus
/// with zero Dirichlet ends. The matrix is kept in symmetric flux form, so
/// that discrete summation by parts is exact; nodal sources are weighted by
/// the cell volumes.
class RadialFv {
 public:
  RadialFv() = default;
  RadialFv(std::shared_ptr<const RadialGrid> grid, int N) : grid_(std::move(grid)), N_(N) {
    const auto& r = grid_->nodes;
    const std::size_t n = r.size();
    face_w_.resize(n - 1);
    for (std::size_t f = 0; f + 1 < n; ++f) {
      const double rf = 0.5 * (r[f] + r[f + 1]);
      face_w_[f] = std::pow(rf, N_ - 1) / (r[f + 1] - r[f]);
    }
    cellvol_.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double lo = 0.5 * (r[i - 1] + r[i]);
      const double hi = 0.5 * (r[i] + r[i + 1]);
      cellvol_[i] = (std::pow(hi, N_) - std::pow(lo, N_)) / N_;
    }
  }

  const RadialGrid& grid() const { return *grid_; }
  std::size_t unknowns() const { return grid_->size() - 2; }
  double cell_volume(std::size_t node) const { return cellvol_[node]; }

  BandedMatrix matrix() const {
    const std::size_t m = unknowns();
    BandedMatrix A(m, 1, 1);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = k + 1;  // node index
      A.at(k, k) = face_w_[i - 1] + face_w_[i];
      if (k > 0) A.at(k, k - 1) = -face_w_[i - 1];
      if (k + 1 < m) A.at(k, k + 1) = -face_w_[i];
    }
    return A;
  }

  // Solves with nodal source f (full-length, endpoints ignored); returns the
  // full-length solution with zero boundary values.
  std::vector<double> solve(const std::vector<double>& f) const {
    const std::size_t m = unknowns();
    std::vector<double> rhs(m);
    for (std::size_t k = 0; k < m; ++k) rhs[k] = f[k + 1] * cellvol_[k + 1];
    const BandedMatrix A = matrix();
    std::vector<double> xk = solve_banded_linear(A, rhs);
    // Verify the linear-solve contract before shipping the profile.
    const std::vector<double> Ax = A.apply(xk);
    double res = 0.0, xn = 0.0, bn = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      res = std::max(res, std::abs(Ax[k] - rhs[k]));
      xn = std::max(xn, std::abs(xk[k]));
      bn = std::max(bn, std::abs(rhs[k]));
    }
    if (res > 1e-10 * (A.inf_norm() * xn + bn))
      fail(ErrorCode::consistency_failure, "projection solve residual above 1e-10");
    std::vector<double> full(grid_->size(), 0.0);
    for (std::size_t k = 0; k < m; ++k) full[k + 1] = xk[k];
    return full;
  }

  // Discrete int grad(u).grad(v) over the annulus (flux form, exact dual of
  // the matrix action).
  double dirichlet_energy(const std::vector<double>& u, const std::vector<double>& v) const {
    double acc = 0.0;
    for (std::size_t f = 0; f + 1 < grid_->size(); ++f)
      acc += face_w_[f] * (u[f + 1] - u[f]) * (v[f + 1] - v[f]);
    return sphere_area(N_) * acc;
  }

  // Cell-weighted quadrature int g dV (the source-side dual pairing).
  double cell_quadrature(const std::vector<double>& g) const {
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < grid_->size(); ++i) acc += g[i] * cellvol_[i];
    return sphere_area(N_) * acc;
  }

 private:
  std::shared_ptr<const RadialGrid> grid_;
  int N_ = 0;
  std::vector<double> face_w_;
  std::vector<double> cellvol_;
};

/// First and second approximations on the annulus: PU, PV solve the linear
/// Dirichlet projections with the bubble nonlinearities as sources, PcalU
/// solves the refined problem driven by (PV)^p.
struct ProjectedBubble {
  BubbleParams params;
  AnnulusMesh mesh;
  RadialFv fv;
  std::vector<double> U_mu, V_mu;  // bubble samples on the mesh
  std::vector<double> PU, PV, PcalU;
};

inline ProjectedBubble project_bubble(const GroundState& gs, const BubbleParams& params,
                                      const AnnulusMesh& mesh) {
  if (norm(params.tau) != 0.0)
    fail(ErrorCode::invalid_range, "radial projection requires tau = 0");
  if (mesh.nodes_below(10.0 * params.mu) < 50)
    fail(ErrorCode::under_resolved_mesh, "fewer than 50 nodes in [eps, 10 mu]");

  const auto& r = mesh.grid->nodes;
  const std::size_t n = r.size();
  ProjectedBubble pb{params, mesh, RadialFv(mesh.grid, mesh.dim()), {}, {}, {}, {}, {}};

  pb.U_mu.resize(n);
  pb.V_mu.resize(n);
  const double su = std::pow(params.mu, -gs.pair.amp_u());
  const double sv = std::pow(params.mu, -gs.pair.amp_v());
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = r[i] / params.mu;
    pb.U_mu[i] = su * gs.u_at(rho);
    pb.V_mu[i] = sv * gs.v_at(rho);
  }

  std::vector<double> src(n);
  for (std::size_t i = 0; i < n; ++i) src[i] = std::pow(pb.V_mu[i], gs.pair.p);
  pb.PU = pb.fv.solve(src);
  for (std::size_t i = 0; i < n; ++i) src[i] = std::pow(pb.U_mu[i], gs.pair.q);
  pb.PV = pb.fv.solve(src);
  for (std::size_t i = 0; i < n; ++i) src[i] = std::pow(pb.PV[i], gs.pair.p);
  pb.PcalU = pb.fv.solve(src);

  // Discrete comparison principles, allowing roundoff-level slack.
  const double slack_u = 1e-9 * pb.U_mu[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (pb.PU[i] < -slack_u || pb.PV[i] < -1e-9 * pb.V_mu[0] || pb.PcalU[i] < -slack_u)
      fail(ErrorCode::consistency_failure, "projection lost positivity");
    if (pb.PU[i] > pb.U_mu[i] + slack_u || pb.PcalU[i] > pb.PU[i] + slack_u)
      fail(ErrorCode::consistency_failure, "projection violates the comparison principle");
  }
  return pb;
}

namespace detail {

// Angular average over directions omega of (a - b cos(theta))^{(2-N)/2},
// with the S^{N-1} surface weight sin^{N-2}(theta). The theta-integrand is a
// smooth periodic function, so the midpoint rule converges spectrally.
inline double angular_average_kernel(int N, double a, double b, int n_theta = 64) {
  double num = 0.0, den = 0.0;
  for (int k = 0; k < n_theta; ++k) {
    const double theta = M_PI * (k + 0.5) / n_theta;
    const double w = std::pow(std::sin(theta), N - 2);
    num += w * std::pow(a - b * std::cos(theta), 0.5 * (2.0 - N));
    den += w;
  }
  return num / den;
}

}  // namespace detail

/// The hole-induced auxiliary potential at radius x (tau = 0):
/// integral over eps/mu <= |y| <= mu^{kappa-1} of
/// G_eps(x, mu y) V^{p-1}(y) |y|^{2-N} dy, with G_eps realized by the
/// certified composite; the composite's error bound is propagated.
inline KernelValue compute_A(const GroundState& gs, const BubbleParams& params, double x,
                             double kappa = 0.05, double C_lem21 = 10.0) {
  if (norm(params.tau) != 0.0) fail(ErrorCode::invalid_range, "compute_A requires tau = 0");
  const double eps = params.epsilon;
  const double mu = params.mu;
  if (!(x > eps) || !(x < 1.0))
    fail(ErrorCode::invalid_range, "evaluation radius must lie in (eps, 1)");
  if (!(kappa > 0.0) || !(kappa < 1.0)) fail(ErrorCode::invalid_range, "kappa must be in (0, 1)");

  const int N = gs.pair.N;
  const double p = gs.pair.p;
  const double gamma = gs.pair.gamma_N;
  const double s_lo = eps / mu;
  const double s_hi = std::pow(mu, kappa - 1.0);
  if (!(s_lo < s_hi)) fail(ErrorCode::invalid_range, "empty integration shell");

  // Split the radial quadrature at the kink of the mean-value kernel.
  const double s_star = x / mu;
  std::vector<double> breaks{s_lo};
  if (s_star > s_lo * (1.0 + 1e-12) && s_star < s_hi * (1.0 - 1e-12)) breaks.push_back(s_star);
  breaks.push_back(s_hi);

  double value = 0.0, err = 0.0;
  for (std::size_t seg = 0; seg + 1 < breaks.size(); ++seg) {
    const std::size_t n_seg =
        std::max<std::size_t>(400, static_cast<std::size_t>(
                                       300.0 * std::log(breaks[seg + 1] / breaks[seg]) + 64));
    const RadialGrid sg = build_grid(breaks[seg], breaks[seg + 1], n_seg, GridKind::geometric);
    std::vector<double> fv(sg.size()), fe(sg.size());
    for (std::size_t i = 0; i < sg.size(); ++i) {
      const double s = sg.nodes[i];
      const double t = mu * s;  // |z| in the ball
      const double g = std::pow(gs.v_at(s), p - 1.0) * std::pow(s, 2.0 - N);
      const double free_avg = gamma * std::pow(std::max(x, t), 2.0 - N);
      const double h_avg =
          gamma * detail::angular_average_kernel(N, x * x * t * t + 1.0, 2.0 * x * t);
      const double h1_avg = gamma * std::pow(eps, N - 2.0) *
                            detail::angular_average_kernel(
                                N, x * x * t * t + std::pow(eps, 4.0), 2.0 * eps * eps * x * t);
      fv[i] = g * (free_avg - h_avg - h1_avg);
      fe[i] = g * C_lem21 * std::pow(eps, N - 2.0) *
              (std::pow(x, 2.0 - N) + std::pow(t, 2.0 - N));
    }
    value += integrate_radial(sg, fv, N);
    err += integrate_radial(sg, fe, N);
  }
  return {value, err};
}

/// L^{(q+1)/q} norm over the annulus of U_mu^q - (PcalU)^q, the source-side
/// size of the ansatz error.
inline double ansatz_residual(const GroundState& gs, const ProjectedBubble& pb) {
  const double q = gs.pair.q;
  const double expo = (q + 1.0) / q;
  const auto& r = pb.mesh.grid->nodes;
  std::vector<double> w(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double diff = std::pow(pb.U_mu[i], q) - std::pow(pb.PcalU[i], q);
    w[i] = std::pow(std::abs(diff), expo);
  }
  const double integral = integrate_radial(*pb.mesh.grid, w, pb.mesh.dim());
  return std::pow(integral, 1.0 / expo);
}

inline void write_projection_csv(const ProjectedBubble& pb, std::ostream& os) {
  os << "r,U_mu,V_mu,PU,PV,PcalU\n";
  os.precision(17);
  const auto& r = pb.mesh.grid->nodes;
  for (std::size_t i = 0; i < r.size(); ++i) {
    os << r[i] << ',' << pb.U_mu[i] << ',' << pb.V_mu[i] << ',' << pb.PU[i] << ',' << pb.PV[i]
       << ',' << pb.PcalU[i] << '\n';
  }
}

}  // namespace lelab
