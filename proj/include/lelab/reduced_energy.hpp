#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lelab/ansatz.hpp"
#include "lelab/errors.hpp"
#include "lelab/greens.hpp"
#include "lelab/ground_state.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

/// Coefficients of the finite-dimensional energy landscape
/// Theta(d, tau) = c1 d^{(N-2)p-2} + c2 d^{2-N} U(tau) V(tau),
/// with c0 the leading constant level of the reduced energy.
struct EnergyConstants {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  // Provenance of the assembly.
  double h_tilde_0 = 0.0;
  double a_tail = 0.0, b_tail = 0.0, v0 = 0.0;
  double int_U_q1 = 0.0, int_U_q = 0.0;
};

inline EnergyConstants energy_constants(const GroundState& gs, double h_tilde_0) {
  if (!(h_tilde_0 > 0.0)) fail(ErrorCode::invalid_range, "H~_0(0) must be positive");
  const MomentIntegrals m = moment_integrals(gs);
  EnergyConstants ec;
  ec.c0 = (2.0 / gs.pair.N) * m.int_U_q1;
  ec.c1 = (1.0 / (gs.pair.p + 1.0)) * std::pow(gs.b_tail / gs.pair.gamma_N, gs.pair.p) *
          h_tilde_0 * m.int_U_q;
  ec.c2 = 1.0 / gs.pair.gamma_N;
  ec.h_tilde_0 = h_tilde_0;
  ec.a_tail = gs.a_tail;
  ec.b_tail = gs.b_tail;
  ec.v0 = gs.shooting_v0;
  ec.int_U_q1 = m.int_U_q1;
  ec.int_U_q = m.int_U_q;
  return ec;
}

/// Landscape sample: value and analytic gradient in (d, tau_1..tau_N).
struct LandscapePoint {
  double d = 0.0;
  std::vector<double> tau;
  double theta = 0.0;
  std::vector<double> grad;  // length N+1
};

inline LandscapePoint theta(const EnergyConstants& ec, const GroundState& gs, double d,
                            std::vector<double> tau) {
  if (!(d > 0.0)) fail(ErrorCode::invalid_range, "d must be positive");
  const int N = gs.pair.N;
  if (tau.empty()) tau.assign(N, 0.0);
  if (static_cast<int>(tau.size()) != N) fail(ErrorCode::invalid_range, "tau dimension mismatch");
  const double s = gs.pair.decay_u();
  const double rho = norm(tau);
  const double U = gs.u_at(rho);
  const double V = gs.v_at(rho);

  LandscapePoint out;
  out.d = d;
  out.tau = std::move(tau);
  out.theta = ec.c1 * std::pow(d, s) + ec.c2 * std::pow(d, 2.0 - N) * U * V;
  out.grad.assign(N + 1, 0.0);
  out.grad[0] =
      s * ec.c1 * std::pow(d, s - 1.0) + (2.0 - N) * ec.c2 * std::pow(d, 1.0 - N) * U * V;
  if (rho > 0.0) {
    const double dUV = gs.du_at(rho) * V + U * gs.dv_at(rho);
    for (int l = 0; l < N; ++l)
      out.grad[1 + l] = ec.c2 * std::pow(d, 2.0 - N) * dUV * out.tau[l] / rho;
  }
  return out;
}

namespace detail {

// Radial second derivative of U V from the limit system itself:
// u'' = -(N-1)/r u' - v^p away from zero and u''(0) = -v(0)^p / N.
inline double uv_second_derivative(const GroundState& gs, double rho) {
  const int N = gs.pair.N;
  if (rho == 0.0) {
    const double upp = gs.u_rr0();
    const double vpp = gs.v_rr0();
    return upp * gs.v_at(0.0) + gs.u_at(0.0) * vpp;
  }
  const double u = gs.u_at(rho), v = gs.v_at(rho);
  const double du = gs.du_at(rho), dv = gs.dv_at(rho);
  const double upp = -(N - 1.0) / rho * du - std::pow(v, gs.pair.p);
  const double vpp = -(N - 1.0) / rho * dv - std::pow(u, gs.pair.q);
  return upp * v + 2.0 * du * dv + u * vpp;
}

// Dense Hessian of Theta at a general admissible point.
inline std::vector<double> theta_hessian(const EnergyConstants& ec, const GroundState& gs,
                                         double d, const std::vector<double>& tau) {
  const int N = gs.pair.N;
  const double s = gs.pair.decay_u();
  const std::size_t m = N + 1;
  std::vector<double> H(m * m, 0.0);
  const double rho = norm(tau);
  const double U = gs.u_at(rho), V = gs.v_at(rho);
  const double F = U * V;
  const double dF = (rho > 0.0) ? gs.du_at(rho) * V + U * gs.dv_at(rho) : 0.0;
  const double d2F = uv_second_derivative(gs, rho);

  H[0] = s * (s - 1.0) * ec.c1 * std::pow(d, s - 2.0) +
         (2.0 - N) * (1.0 - N) * ec.c2 * std::pow(d, -N) * F;
  for (int l = 0; l < N; ++l) {
    const double cross =
        (rho > 0.0) ? (2.0 - N) * ec.c2 * std::pow(d, 1.0 - N) * dF * tau[l] / rho : 0.0;
    H[0 * m + (1 + l)] = cross;
    H[(1 + l) * m + 0] = cross;
  }
  for (int l = 0; l < N; ++l) {
    for (int k = 0; k < N; ++k) {
      double val;
      if (rho > 0.0) {
        const double unit_lk = tau[l] * tau[k] / (rho * rho);
        val = d2F * unit_lk + dF * (((l == k) ? 1.0 : 0.0) - unit_lk) / rho;
      } else {
        val = (l == k) ? d2F : 0.0;
      }
      H[(1 + l) * m + (1 + k)] = ec.c2 * std::pow(d, 2.0 - N) * val;
    }
  }
  return H;
}

}  // namespace detail

/// Saddle of the landscape: closed-form d~ with tau~ = 0, plus a Newton
/// refinement of grad Theta from a deliberately displaced starting point.
struct SaddlePoint {
  double d_tilde = 0.0;
  std::vector<double> tau_tilde;
  double d_newton = 0.0;
  double newton_gap = 0.0;  // distance between Newton limit and closed form
  bool newton_ok = false;
};

inline SaddlePoint saddle_point(const EnergyConstants& ec, const GroundState& gs) {
  if (!(ec.c1 > 0.0) || !(ec.c2 > 0.0)) fail(ErrorCode::invalid_range, "constants must be positive");
  const int N = gs.pair.N;
  const double s = gs.pair.decay_u();
  SaddlePoint sp;
  sp.tau_tilde.assign(N, 0.0);
  sp.d_tilde =
      std::pow(ec.c2 * (N - 2.0) * gs.shooting_v0 / (ec.c1 * s), 1.0 / (s + N - 2.0));

  // Damped Newton on grad Theta from (2 d~, 0.1 e_1).
  std::vector<double> x(N + 1, 0.0);
  x[0] = 2.0 * sp.d_tilde;
  x[1] = 0.1;
  double gn_prev = std::numeric_limits<double>::infinity();
  bool ok = false;
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> tau(x.begin() + 1, x.end());
    const LandscapePoint lp = theta(ec, gs, x[0], tau);
    double gn = 0.0;
    for (double g : lp.grad) gn = std::max(gn, std::abs(g));
    if (gn <= 1e-12 * std::max(1.0, std::abs(lp.theta))) {
      ok = true;
      break;
    }
    std::vector<double> H = detail::theta_hessian(ec, gs, x[0], tau);
    std::vector<double> rhs(lp.grad);
    for (double& v : rhs) v = -v;
    std::vector<double> step;
    try {
      step = solve_dense(std::move(H), std::move(rhs));
    } catch (const Error&) {
      break;
    }
    double lambda = 1.0;
    for (int h = 0; h < 30 && !(x[0] + lambda * step[0] > 0.0); ++h) lambda *= 0.5;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += lambda * step[i];
    if (!(x[0] > 0.0) || gn > 1e6 * std::max(1.0, gn_prev)) break;
    gn_prev = gn;
  }
  sp.d_newton = x[0];
  double gap = std::abs(x[0] - sp.d_tilde);
  for (std::size_t i = 1; i < x.size(); ++i) gap = std::max(gap, std::abs(x[i]));
  sp.newton_gap = gap;
  sp.newton_ok = ok && gap <= 1e-8 * std::max(1.0, sp.d_tilde);
  return sp;
}

/// Spectrum of the analytic Hessian at the saddle, assembled from the
/// closed forms: one positive direction (d) and N degenerate negative
/// directions (tau).
struct HessianSignature {
  int n_pos = 0;
  int n_neg = 0;
  std::vector<double> eigenvalues;
  double dd_entry = 0.0;
  double tau_entry = 0.0;
};

inline HessianSignature hessian_signature(const EnergyConstants& ec, const GroundState& gs) {
  const int N = gs.pair.N;
  const double s = gs.pair.decay_u();
  const SaddlePoint sp = saddle_point(ec, gs);
  const double dt = sp.d_tilde;
  const double v0 = gs.shooting_v0;

  HessianSignature sig;
  sig.dd_entry = std::pow(dt, -N) * ec.c2 * (N - 2.0) * (s + N - 2.0) * v0;
  sig.tau_entry =
      -ec.c2 / N * std::pow(dt, 2.0 - N) * (std::pow(v0, gs.pair.p + 1.0) + 1.0);
  sig.eigenvalues.push_back(sig.dd_entry);
  for (int l = 0; l < N; ++l) sig.eigenvalues.push_back(sig.tau_entry);
  for (double ev : sig.eigenvalues) (ev > 0.0 ? sig.n_pos : sig.n_neg) += 1;
  return sig;
}

/// Numerical reduced energy J = I_eps(PcalU, PV) by radial quadrature, with
/// the cross term evaluated three ways (discrete flux pairing against both
/// source-side quadratures) as a consistency check.
struct ReducedEnergyResult {
  double value = 0.0;
  double cross_flux = 0.0;    // int grad(PcalU).grad(PV)
  double cross_pv = 0.0;      // int (PV)^{p+1}
  double cross_source = 0.0;  // int PcalU U_mu^q
  double spread = 0.0;        // max relative disagreement of the three
};

inline ReducedEnergyResult reduced_energy_numeric(const GroundState& gs,
                                                  const ProjectedBubble& pb) {
  if (norm(pb.params.tau) != 0.0) fail(ErrorCode::invalid_range, "requires tau = 0");
  const double p = gs.pair.p;
  const double q = gs.pair.q;
  const auto& grid = *pb.mesh.grid;
  const std::size_t n = grid.size();

  ReducedEnergyResult out;
  out.cross_flux = pb.fv.dirichlet_energy(pb.PcalU, pb.PV);

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(pb.PV[i], p + 1.0);
  out.cross_pv = integrate_radial(grid, w, gs.pair.N);
  for (std::size_t i = 0; i < n; ++i) w[i] = pb.PcalU[i] * std::pow(pb.U_mu[i], q);
  out.cross_source = integrate_radial(grid, w, gs.pair.N);

  const double lo = std::min({out.cross_flux, out.cross_pv, out.cross_source});
  const double hi = std::max({out.cross_flux, out.cross_pv, out.cross_source});
  out.spread = (hi - lo) / std::abs(hi);
  if (out.spread > 1e-4)
    fail(ErrorCode::consistency_failure,
         "cross-term routes disagree by " + std::to_string(out.spread));

  for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(pb.PcalU[i], q + 1.0);
  const double u_power = integrate_radial(grid, w, gs.pair.N);
  out.value = out.cross_flux - out.cross_pv / (p + 1.0) - u_power / (q + 1.0);
  return out;
}

}  // namespace lelab
