#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lelab/errors.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

using Point = std::vector<double>;

inline double sgn_pow(double x, double a) {
  if (x == 0.0) return 0.0;
  return x > 0.0 ? std::pow(x, a) : -std::pow(-x, a);
}

inline double dist(const Point& x, const Point& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double norm(const Point& x) {
  double acc = 0.0;
  for (double c : x) acc += c * c;
  return std::sqrt(acc);
}

/// Exponent bundle on the critical hyperbola 1/(p+1) + 1/(q+1) = (N-2)/N.
/// q is always derived from p, so off-hyperbola states cannot be constructed.
struct CriticalPair {
  int N = 0;
  double p = 0.0;
  double q = 0.0;
  double alpha = 0.0;   // concentration exponent (N-2)/((N-2)p + N - 4)
  double p_star = 0.0;  // 1/p* = p/(p+1) - 1/N
  double q_star = 0.0;  // 1/q* = q/(q+1) - 1/N
  double gamma_N = 0.0; // [(N-2)|S^{N-1}|]^{-1}

  // (N-2)p - 2, the u-component decay exponent; equals N(p+1)/(q+1).
  double decay_u() const { return (N - 2) * p - 2.0; }
  // N - (N-2)p, the complementary hyperbola factor.
  double cofactor() const { return N - (N - 2) * p; }
  double amp_u() const { return static_cast<double>(N) / (q + 1.0); }  // bubble amplitude exponents
  double amp_v() const { return static_cast<double>(N) / (p + 1.0); }
};

namespace detail {

inline CriticalPair make_pair(int N, double p) {
  CriticalPair pair;
  pair.N = N;
  pair.p = p;
  const double target = (N - 2.0) / N - 1.0 / (p + 1.0);
  if (!(target > 0.0)) fail(ErrorCode::exponent_out_of_range, "hyperbola has no conjugate q");
  pair.q = 1.0 / target - 1.0;
  pair.alpha = (N - 2.0) / ((N - 2.0) * p + N - 4.0);
  pair.p_star = 1.0 / (p / (p + 1.0) - 1.0 / N);
  pair.q_star = 1.0 / (pair.q / (pair.q + 1.0) - 1.0 / N);
  pair.gamma_N = 1.0 / ((N - 2.0) * sphere_area(N));
  return pair;
}

}  // namespace detail

inline CriticalPair critical_pair(int N, double p) {
  if (N < 4) fail(ErrorCode::exponent_out_of_range, "dimension must be at least 4");
  const double p_hi = (N - 1.0) / (N - 2.0);
  if (!(p > 1.0) || !(p < p_hi))
    fail(ErrorCode::exponent_out_of_range,
         "p = " + std::to_string(p) + " outside (1, " + std::to_string(p_hi) + ")");
  return detail::make_pair(N, p);
}

// Escape hatch for sanity oracles outside the production exponent window
// (e.g. the scalar bubble at p = q = (N+2)/(N-2)). Skips the range check only.
inline CriticalPair critical_pair_unchecked(int N, double p) {
  if (N < 3) fail(ErrorCode::exponent_out_of_range, "dimension must be at least 3");
  return detail::make_pair(N, p);
}

/// Tabulated radial ground state of the limit system, normalized by u(0) = 1,
/// with cubic-Hermite readout and fitted power-law tails past the grid.
struct GroundState {
  CriticalPair pair;
  std::shared_ptr<const RadialGrid> grid;
  std::vector<double> u, v, du, dv;
  double shooting_v0 = 0.0;
  double a_tail = 0.0, b_tail = 0.0;
  double a_tail_corr = 0.0, b_tail_corr = 0.0;  // next-order 1/r coefficients
  bool tails_fitted = false;

  HermiteSpline u_spline, v_spline;

  double r_max() const { return grid->r_max; }

  double u_at(double r) const {
    if (r <= grid->r_max) return u_spline.eval(r);
    const double s = pair.decay_u();
    if (tails_fitted) return (a_tail + a_tail_corr / r) * std::pow(r, -s);
    return u.back() * std::pow(r / grid->r_max, -s);
  }

  double du_at(double r) const {
    if (r <= grid->r_max) return u_spline.deriv(r);
    const double s = pair.decay_u();
    if (tails_fitted)
      return -s * a_tail * std::pow(r, -s - 1.0) - (s + 1.0) * a_tail_corr * std::pow(r, -s - 2.0);
    return u.back() * (-s) * std::pow(r / grid->r_max, -s - 1.0) / grid->r_max;
  }

  double v_at(double r) const {
    if (r <= grid->r_max) return v_spline.eval(r);
    const double s = static_cast<double>(pair.N) - 2.0;
    if (tails_fitted) return (b_tail + b_tail_corr / r) * std::pow(r, -s);
    return v.back() * std::pow(r / grid->r_max, -s);
  }

  double dv_at(double r) const {
    if (r <= grid->r_max) return v_spline.deriv(r);
    const double s = static_cast<double>(pair.N) - 2.0;
    if (tails_fitted)
      return -s * b_tail * std::pow(r, -s - 1.0) - (s + 1.0) * b_tail_corr * std::pow(r, -s - 2.0);
    return v.back() * (-s) * std::pow(r / grid->r_max, -s - 1.0) / grid->r_max;
  }

  // Curvatures at the origin, pinned by the limit system itself.
  double u_rr0() const { return -std::pow(shooting_v0, pair.p) / pair.N; }
  double v_rr0() const { return -1.0 / pair.N; }
};

struct TailFit {
  double a_tail = 0.0, b_tail = 0.0;
  double a_corr = 0.0, b_corr = 0.0;
  double a_rms_rel = 0.0, b_rms_rel = 0.0;
};

namespace detail {

// Least squares of w ~ a + c/r (+ c2 r^{-lambda2} when lambda2 > 0); the
// second correction absorbs the homogeneous r^{2-N} admixture whose relative
// size against the leading power is r^{-(N-(N-2)p)}.
inline void fit_tail_window(const std::vector<double>& r, const std::vector<double>& w,
                            double lambda2, double* a, double* c, double* rms_rel) {
  const std::size_t m = r.size();
  const std::size_t cols = lambda2 > 0.0 ? 3 : 2;
  // Normal equations for the basis {1, 1/r, r^{-lambda2}}.
  double G[9] = {0}, rhs[3] = {0};
  for (std::size_t i = 0; i < m; ++i) {
    double phi[3] = {1.0, 1.0 / r[i], lambda2 > 0.0 ? std::pow(r[i], -lambda2) : 0.0};
    for (std::size_t e = 0; e < cols; ++e) {
      rhs[e] += phi[e] * w[i];
      for (std::size_t f = 0; f < cols; ++f) G[e * 3 + f] += phi[e] * phi[f];
    }
  }
  std::vector<double> A(cols * cols);
  std::vector<double> b(cols);
  for (std::size_t e = 0; e < cols; ++e) {
    b[e] = rhs[e];
    for (std::size_t f = 0; f < cols; ++f) A[e * cols + f] = G[e * 3 + f];
  }
  const std::vector<double> coef = solve_dense(std::move(A), std::move(b));
  *a = coef[0];
  *c = coef[1];
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double fitv = coef[0] + coef[1] / r[i];
    if (cols == 3) fitv += coef[2] * std::pow(r[i], -lambda2);
    const double res = w[i] - fitv;
    ss += res * res;
  }
  *rms_rel = std::sqrt(ss / static_cast<double>(m)) / std::abs(*a);
}

inline void fit_tail_component(const GroundState& gs, const std::vector<double>& profile,
                               double exponent, double lambda2, const char* label, double* value,
                               double* corr, double* rms_rel) {
  const auto& nodes = gs.grid->nodes;
  const double r_hi = nodes.back();
  const double r_lo = r_hi / 10.0;
  std::vector<double> r, w;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= r_lo) {
      r.push_back(nodes[i]);
      w.push_back(std::pow(nodes[i], exponent) * profile[i]);
    }
  }
  if (r.size() < 8) fail(ErrorCode::tail_not_resolved, std::string(label) + ": window too small");

  fit_tail_window(r, w, lambda2, value, corr, rms_rel);

  // Drift check: the two halves of the window must agree on the constant.
  const std::size_t half = r.size() / 2;
  double a1, c1, rms1, a2, c2, rms2;
  {
    std::vector<double> r1(r.begin(), r.begin() + half), w1(w.begin(), w.begin() + half);
    std::vector<double> r2(r.begin() + half, r.end()), w2(w.begin() + half, w.end());
    fit_tail_window(r1, w1, lambda2, &a1, &c1, &rms1);
    fit_tail_window(r2, w2, lambda2, &a2, &c2, &rms2);
  }
  if (std::abs(a1 - a2) > 0.01 * std::abs(*value))
    fail(ErrorCode::tail_not_resolved,
         std::string(label) + ": half-window drift " + std::to_string(std::abs(a1 - a2)) +
             " exceeds 1% of " + std::to_string(*value));
}

}  // namespace detail

/// Fits the decay constants of Lemma-type tails u ~ a r^{-((N-2)p-2)},
/// v ~ b r^{-(N-2)}, each with a 1/r next-order correction, over the last
/// decade of the grid.
inline TailFit tail_constants(const GroundState& gs) {
  if (gs.grid->r_max < 50.0)
    fail(ErrorCode::invalid_range, "tail fit needs profiles out to r_max >= 50");
  TailFit fit;
  // Next-order exponents beyond the 1/r term of the decay lemma: the u-tail
  // carries a homogeneous r^{2-N} admixture (relative size r^{-(N-(N-2)p)}),
  // the v-tail a near-field response to the steep source U^q (relative size
  // r^{-(((N-2)p-2)q - N)}).
  detail::fit_tail_component(gs, gs.u, gs.pair.decay_u(), gs.pair.cofactor(), "u-tail",
                             &fit.a_tail, &fit.a_corr, &fit.a_rms_rel);
  const double lambda_v = std::clamp(gs.pair.decay_u() * gs.pair.q - gs.pair.N, 1.0, 8.0);
  detail::fit_tail_component(gs, gs.v, gs.pair.N - 2.0, lambda_v, "v-tail", &fit.b_tail,
                             &fit.b_corr, &fit.b_rms_rel);
  return fit;
}

struct ShootingOptions {
  std::optional<double> forced_v0;  // skip the bisection entirely
  bool fit_tails = true;
  double bracket_lo = 1e-8;
  double bracket_hi = 10.0;
  double bracket_width = 1e-12;
};

namespace detail {

enum class ShotClass { too_high, too_low };

struct ShotResult {
  ShotClass cls = ShotClass::too_low;
  bool crossed = false;
  std::vector<double> u, du, v, dv;
};

// RK4 march of the radial limit system over a prepared grid. The first step
// leaves r = 0 via the quartic series start; the (N-1)/r term is then regular.
inline ShotResult integrate_limit_system(const CriticalPair& pair, double v0,
                                         const RadialGrid& grid) {
  const int N = pair.N;
  const double p = pair.p;
  const double q = pair.q;
  const std::size_t n = grid.size();

  ShotResult out;
  out.u.assign(n, 0.0);
  out.du.assign(n, 0.0);
  out.v.assign(n, 0.0);
  out.dv.assign(n, 0.0);

  out.u[0] = 1.0;
  out.v[0] = v0;

  // Series start: u = 1 + u2 r^2 + u4 r^4, v = v0 + v2 r^2 + v4 r^4.
  const double u2 = -std::pow(v0, p) / (2.0 * N);
  const double v2 = -1.0 / (2.0 * N);
  const double u4 = -p * std::pow(v0, p - 1.0) * v2 / (4.0 * N + 8.0);
  const double v4 = -q * u2 / (4.0 * N + 8.0);

  const double r1 = grid.nodes[1];
  out.u[1] = 1.0 + u2 * r1 * r1 + u4 * r1 * r1 * r1 * r1;
  out.du[1] = 2.0 * u2 * r1 + 4.0 * u4 * r1 * r1 * r1;
  out.v[1] = v0 + v2 * r1 * r1 + v4 * r1 * r1 * r1 * r1;
  out.dv[1] = 2.0 * v2 * r1 + 4.0 * v4 * r1 * r1 * r1;

  struct State {
    double u, du, v, dv;
  };
  auto rhs = [&](double r, const State& s) -> State {
    const double c = (N - 1.0) / r;
    return {s.du, -c * s.du - sgn_pow(s.v, p), s.dv, -c * s.dv - sgn_pow(s.u, q)};
  };

  State y{out.u[1], out.du[1], out.v[1], out.dv[1]};
  std::size_t stop = n;  // first index where a component went non-positive
  char crossed_component = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = grid.nodes[i];
    const double h = grid.nodes[i + 1] - r;
    const State k1 = rhs(r, y);
    const State y2{y.u + 0.5 * h * k1.u, y.du + 0.5 * h * k1.du, y.v + 0.5 * h * k1.v,
                   y.dv + 0.5 * h * k1.dv};
    const State k2 = rhs(r + 0.5 * h, y2);
    const State y3{y.u + 0.5 * h * k2.u, y.du + 0.5 * h * k2.du, y.v + 0.5 * h * k2.v,
                   y.dv + 0.5 * h * k2.dv};
    const State k3 = rhs(r + 0.5 * h, y3);
    const State y4{y.u + h * k3.u, y.du + h * k3.du, y.v + h * k3.v, y.dv + h * k3.dv};
    const State k4 = rhs(r + h, y4);
    y.u += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    y.du += h / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
    y.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    y.dv += h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.u[i + 1] = y.u;
    out.du[i + 1] = y.du;
    out.v[i + 1] = y.v;
    out.dv[i + 1] = y.dv;
    if (y.u <= 0.0 || y.v <= 0.0) {
      stop = i + 1;
      crossed_component = (y.u <= y.v) ? 'u' : 'v';
      break;
    }
  }

  if (stop < n) {
    out.crossed = true;
    // u hitting zero means the decay was forced too hard (v0 too large);
    // v hitting zero means u stayed too large (v0 too small).
    out.cls = (crossed_component == 'u') ? ShotClass::too_high : ShotClass::too_low;
    return out;
  }

  // No crossing: classify by the growth of r^{(N-2)p-2} u(r) over the last
  // 10% of the range. Growth = decay slower than critical = v0 too small.
  const double s = pair.decay_u();
  const double r_end = grid.nodes[n - 1];
  const std::size_t i90 = grid.locate(0.9 * r_end);
  const double w90 = std::pow(grid.nodes[i90], s) * out.u[i90];
  const double w_end = std::pow(r_end, s) * out.u[n - 1];
  out.cls = (w_end > w90) ? ShotClass::too_low : ShotClass::too_high;
  return out;
}

}  // namespace detail

/// Shooting construction of the radial ground state: bisection on v(0)
/// between too-fast decay (a profile hits zero within the range, u first) and
/// too-slow decay (the weighted variable r^{(N-2)p-2} u grows).
inline GroundState solve_limit_system(const CriticalPair& pair, double r_max, std::size_t n,
                                      const ShootingOptions& options = {}) {
  if (!(r_max >= 50.0)) fail(ErrorCode::invalid_range, "r_max must be at least 50");
  if (n < 2000) fail(ErrorCode::invalid_range, "need at least 2000 nodes");

  // March the ODE out to 2 r_max but store only [0, r_max]: the stretch past
  // r_max absorbs the endpoint contamination of the near-critical shot, so
  // the stored last decade is clean for the tail fit.
  auto stored = std::make_shared<RadialGrid>(build_split_grid(1.0, r_max, n / 2, n - n / 2 + 1));
  const std::size_t n_outer = n - n / 2 + 1;
  const std::size_t n_ext = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n_outer - 1) * std::log(2.0) / std::log(r_max)));
  RadialGrid march = *stored;
  march.kind = GridKind::piecewise;
  {
    const RadialGrid ext =
        build_grid(r_max, 2.0 * r_max, std::max<std::size_t>(n_ext + 1, 8), GridKind::geometric);
    march.nodes.insert(march.nodes.end(), ext.nodes.begin() + 1, ext.nodes.end());
    march.r_max = march.nodes.back();
  }
  auto grid = stored;

  double v0 = 0.0;
  detail::ShotResult shot;
  if (options.forced_v0) {
    v0 = *options.forced_v0;
    shot = detail::integrate_limit_system(pair, v0, march);
    if (shot.crossed) fail(ErrorCode::bracket_not_found, "forced v(0) profile crosses zero");
  } else {
    // Locate a bracket inside (bracket_lo, bracket_hi].
    auto classify = [&](double cand) {
      return detail::integrate_limit_system(pair, cand, march).cls;
    };
    double lo = 1.0, hi = 1.0;
    if (classify(1.0) == detail::ShotClass::too_high) {
      do {
        hi = lo;
        lo *= 0.5;
        if (lo < options.bracket_lo)
          fail(ErrorCode::bracket_not_found, "no undershoot above v(0) = " +
                                                 std::to_string(options.bracket_lo));
      } while (classify(lo) == detail::ShotClass::too_high);
    } else {
      do {
        lo = hi;
        hi *= 2.0;
        if (hi > options.bracket_hi)
          fail(ErrorCode::bracket_not_found,
               "no overshoot below v(0) = " + std::to_string(options.bracket_hi));
      } while (classify(hi) == detail::ShotClass::too_low);
    }
    while (hi - lo > options.bracket_width) {
      const double mid = 0.5 * (lo + hi);
      (classify(mid) == detail::ShotClass::too_high ? hi : lo) = mid;
    }
    v0 = 0.5 * (lo + hi);
    shot = detail::integrate_limit_system(pair, v0, march);
    if (shot.crossed)
      fail(ErrorCode::no_convergence, "converged v(0) still produces a zero crossing");
  }

  const std::size_t kept = stored->size();
  GroundState gs;
  gs.pair = pair;
  gs.grid = grid;
  shot.u.resize(kept);
  shot.du.resize(kept);
  shot.v.resize(kept);
  shot.dv.resize(kept);
  gs.u = std::move(shot.u);
  gs.du = std::move(shot.du);
  gs.v = std::move(shot.v);
  gs.dv = std::move(shot.dv);
  gs.shooting_v0 = v0;

  for (std::size_t i = 1; i < gs.u.size(); ++i) {
    if (!(gs.u[i] > 0.0) || !(gs.v[i] > 0.0))
      fail(ErrorCode::no_convergence, "profile not strictly positive");
    if (!(gs.u[i] < gs.u[i - 1]) || !(gs.v[i] < gs.v[i - 1]))
      fail(ErrorCode::no_convergence, "profile not strictly decreasing");
  }

  gs.u_spline = HermiteSpline(grid, gs.u, gs.du);
  gs.v_spline = HermiteSpline(grid, gs.v, gs.dv);

  if (options.fit_tails) {
    const TailFit fit = tail_constants(gs);
    gs.a_tail = fit.a_tail;
    gs.a_tail_corr = fit.a_corr;
    gs.b_tail = fit.b_tail;
    gs.b_tail_corr = fit.b_corr;
    gs.tails_fitted = true;
  }
  return gs;
}

/// Scaled bubble (U_{mu,xi}, V_{mu,xi}) at a point.
inline std::pair<double, double> bubble_eval(const GroundState& gs, double mu, const Point& xi,
                                             const Point& x) {
  if (!(mu > 0.0)) fail(ErrorCode::invalid_range, "mu must be positive");
  const double rho = dist(x, xi) / mu;
  const double U_val = std::pow(mu, -gs.pair.amp_u()) * gs.u_at(rho);
  const double V_val = std::pow(mu, -gs.pair.amp_v()) * gs.v_at(rho);
  return {U_val, V_val};
}

/// Non-degeneracy kernels: l = 0 is the dilation direction, l = 1..N the
/// translations, scaled with the extra mu^{-1} of the parameter derivative.
inline std::pair<double, double> kernel_eval(const GroundState& gs, int l, double mu,
                                             const Point& xi, const Point& x) {
  const int N = gs.pair.N;
  if (l < 0 || l > N) fail(ErrorCode::index_out_of_range, "kernel index l = " + std::to_string(l));
  if (!(mu > 0.0)) fail(ErrorCode::invalid_range, "mu must be positive");
  const double rho = dist(x, xi) / mu;
  const double su = std::pow(mu, -gs.pair.amp_u() - 1.0);
  const double sv = std::pow(mu, -gs.pair.amp_v() - 1.0);
  if (l == 0) {
    const double psi = rho * gs.du_at(rho) + N * gs.u_at(rho) / (gs.pair.q + 1.0);
    const double phi = rho * gs.dv_at(rho) + N * gs.v_at(rho) / (gs.pair.p + 1.0);
    return {su * psi, sv * phi};
  }
  if (rho == 0.0) return {0.0, 0.0};
  const double dir = (x[l - 1] - xi[l - 1]) / (mu * rho);
  return {su * gs.du_at(rho) * dir, sv * gs.dv_at(rho) * dir};
}

struct MomentIntegrals {
  double int_U_q1 = 0.0;  // int_{R^N} U^{q+1}
  double int_U_q = 0.0;   // int_{R^N} U^q
};

inline MomentIntegrals moment_integrals(const GroundState& gs) {
  const double s = gs.pair.decay_u();
  const double q = gs.pair.q;
  const int N = gs.pair.N;
  if (!(s * q > static_cast<double>(N)))
    fail(ErrorCode::nonconvergent_tail, "U^q tail does not converge");
  std::vector<double> fq1(gs.u.size()), fq(gs.u.size());
  for (std::size_t i = 0; i < gs.u.size(); ++i) {
    fq1[i] = std::pow(gs.u[i], q + 1.0);
    fq[i] = std::pow(gs.u[i], q);
  }
  MomentIntegrals m;
  m.int_U_q1 = integrate_radial(*gs.grid, fq1, N, s * (q + 1.0));
  m.int_U_q = integrate_radial(*gs.grid, fq, N, s * q);
  return m;
}

inline void write_profiles_csv(const GroundState& gs, std::ostream& os) {
  os << "r,u,v,du,dv\n";
  os.precision(17);
  for (std::size_t i = 0; i < gs.grid->size(); ++i) {
    os << gs.grid->nodes[i] << ',' << gs.u[i] << ',' << gs.v[i] << ',' << gs.du[i] << ','
       << gs.dv[i] << '\n';
  }
}

}  // namespace lelab
