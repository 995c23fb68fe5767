#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lelab/errors.hpp"
#include "lelab/ground_state.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

/// Unit ball with a concentric spherical hole of radius epsilon.
struct PuncturedBall {
  double epsilon = 0.0;
  int N = 0;

  PuncturedBall(double eps, int dim) : epsilon(eps), N(dim) {
    if (!(eps > 0.0) || !(eps <= 0.25))
      fail(ErrorCode::invalid_range, "hole radius must lie in (0, 1/4]");
    if (dim < 3) fail(ErrorCode::invalid_range, "dimension must be at least 3");
  }
};

/// Kernel evaluation plus a certified error bound (zero for closed forms).
struct KernelValue {
  double value = 0.0;
  double error_bound = 0.0;
};

namespace detail {

inline double gamma_const(int N) { return 1.0 / ((N - 2.0) * sphere_area(N)); }

inline double dot(const Point& x, const Point& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace detail

/// Green's function of the Dirichlet Laplacian on the unit ball and its
/// regular part, via the image charge across the sphere:
/// H(x,y) = gamma_N (|y|^2|x|^2 - 2 x.y + 1)^{(2-N)/2}.
inline std::pair<double, double> greens_ball(int N, const Point& x, const Point& y) {
  const double rx = norm(x), ry = norm(y);
  if (rx > 1.0 + 1e-12 || ry > 1.0 + 1e-12)
    fail(ErrorCode::outside_ball, "points must lie in the closed unit ball");
  const double sep = dist(x, y);
  if (sep < 1e-12) fail(ErrorCode::coincident_points, "x and y coincide");
  const double gamma = detail::gamma_const(N);
  const double m2 = rx * rx * ry * ry - 2.0 * detail::dot(x, y) + 1.0;
  const double H = gamma * std::pow(m2, 0.5 * (2.0 - N));
  const double G = gamma * std::pow(sep, 2.0 - N) - H;
  return {G, H};
}

/// Regular part for the exterior of the small ball:
/// H_{eps,1}(x,y) = gamma_N eps^{N-2} (|x|^2|y|^2 - 2 eps^2 x.y + eps^4)^{(2-N)/2}.
inline KernelValue regular_part_exterior(const PuncturedBall& pb, const Point& x, const Point& y) {
  const double eps = pb.epsilon;
  const double rx = norm(x), ry = norm(y);
  if (rx < eps * (1.0 - 1e-12) || ry < eps * (1.0 - 1e-12))
    fail(ErrorCode::inside_hole, "points must lie outside the hole");
  const double gamma = detail::gamma_const(pb.N);
  const double m2 =
      rx * rx * ry * ry - 2.0 * eps * eps * detail::dot(x, y) + eps * eps * eps * eps;
  return {gamma * std::pow(eps, pb.N - 2.0) * std::pow(m2, 0.5 * (2.0 - pb.N)), 0.0};
}

/// Composite regular part of the punctured ball: H + H_{eps,1} with the
/// certified remainder C eps^{N-2} (|x|^{2-N} + |y|^{2-N}).
inline KernelValue regular_part_punctured(const PuncturedBall& pb, const Point& x, const Point& y,
                                          double C_lem21 = 10.0) {
  const double eps = pb.epsilon;
  const double rx = norm(x), ry = norm(y);
  if (rx < eps * (1.0 - 1e-12) || ry < eps * (1.0 - 1e-12))
    fail(ErrorCode::inside_hole, "points must lie outside the hole");
  if (rx > 1.0 + 1e-12 || ry > 1.0 + 1e-12)
    fail(ErrorCode::outside_ball, "points must lie in the closed unit ball");
  const auto [G, H] = greens_ball(pb.N, x, y);
  (void)G;
  const KernelValue h1 = regular_part_exterior(pb, x, y);
  KernelValue out;
  out.value = H + h1.value;
  out.error_bound = C_lem21 * std::pow(eps, pb.N - 2.0) *
                    (std::pow(rx, 2.0 - pb.N) + std::pow(ry, 2.0 - pb.N));
  return out;
}

/// Constant of the nonlinear regular part:
/// gamma_tilde = gamma_N^p / (((N-2)p - 2)(N - (N-2)p)).
inline double gamma_tilde(const CriticalPair& pair) {
  return std::pow(pair.gamma_N, pair.p) / (pair.decay_u() * pair.cofactor());
}

struct HTildeResult {
  double value = 0.0;            // H~_0(0)
  double source_integral = 0.0;  // int_Omega of the defining source
};

namespace detail {

// Source of the radial problem for w = H~_0:
// S(r) = gamma_N^p [ r^{(2-N)p} - (r^{2-N} - 1)^p ], written in the
// cancellation-free form r^{(2-N)p} (1 - (1 - r^{N-2})^p).
inline double h_tilde_source(const CriticalPair& pair, double r) {
  const double gp = std::pow(pair.gamma_N, pair.p);
  const double z = std::pow(r, pair.N - 2.0);
  const double bracket = -std::expm1(pair.p * std::log1p(-z));
  return gp * std::pow(r, (2.0 - pair.N) * pair.p) * bracket;
}

struct HTildeSolve {
  double w0 = 0.0;
  double source_integral = 0.0;
};

inline HTildeSolve h_tilde_solve(const CriticalPair& pair, std::size_t n) {
  const int N = pair.N;
  // Geometric mesh clustered at the origin where the source is mildly
  // singular (S ~ r^{(N-2)(1-p)}), with an r = 0 node closing the cell
  // structure; zero flux there is the regularity condition.
  RadialGrid mesh = build_grid(1e-8, 1.0, n, GridKind::geometric);
  mesh.nodes.insert(mesh.nodes.begin(), 0.0);
  mesh.r_min = 0.0;

  const std::size_t m = mesh.size();
  std::vector<double> face(m - 1);  // face radii between nodes
  for (std::size_t i = 0; i + 1 < m; ++i) face[i] = 0.5 * (mesh.nodes[i] + mesh.nodes[i + 1]);

  // Cell source integrals int S(r) r^{N-1} dr by 4-point Gauss per cell.
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                   0.3399810435848563, 0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                   0.3478548451374538};
  auto cell_integral = [&](double lo, double hi) {
    const double c = 0.5 * (lo + hi), hwid = 0.5 * (hi - lo);
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double r = c + hwid * gx[k];
      acc += gw[k] * h_tilde_source(pair, r) * std::pow(r, N - 1);
    }
    return acc * hwid;
  };

  std::vector<double> Q(m, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lo = (i == 0) ? 0.0 : face[i - 1];
    const double hi = (i + 1 == m) ? 1.0 : face[i];
    Q[i] = cell_integral(lo, hi);
    total += Q[i];
  }

  // Unknowns w_0..w_{m-2}; w_{m-1} = gamma_tilde is the Dirichlet value.
  const double w_bc = gamma_tilde(pair);
  const std::size_t nu = m - 1;
  BandedMatrix A(nu, 1, 1);
  std::vector<double> rhs(nu, 0.0);
  for (std::size_t i = 0; i < nu; ++i) {
    const double cl = (i == 0) ? 0.0
                               : std::pow(face[i - 1], N - 1) /
                                     (mesh.nodes[i] - mesh.nodes[i - 1]);
    const double cr = std::pow(face[i], N - 1) / (mesh.nodes[i + 1] - mesh.nodes[i]);
    A.at(i, i) = cl + cr;
    if (i > 0) A.at(i, i - 1) = -cl;
    if (i + 1 < nu)
      A.at(i, i + 1) = -cr;
    else
      rhs[i] += cr * w_bc;
    rhs[i] += Q[i];
  }
  const std::vector<double> w = solve_banded_linear(A, rhs);
  return {w[0], sphere_area(N) * total};
}

}  // namespace detail

/// Value at the origin of the nonlinear regular part H~_0, from a radial
/// finite-volume solve of -Delta w = gamma_N^p [r^{(2-N)p} - (r^{2-N}-1)^p]
/// with w(1) = gamma_tilde. Doubling the mesh must move the answer by less
/// than 0.5%.
inline HTildeResult h_tilde_center_full(const CriticalPair& pair, std::size_t n) {
  if (n < 4000) fail(ErrorCode::invalid_range, "need at least 4000 mesh cells");
  const detail::HTildeSolve coarse = detail::h_tilde_solve(pair, n);
  const detail::HTildeSolve fine = detail::h_tilde_solve(pair, 2 * n);
  if (std::abs(fine.w0 - coarse.w0) > 0.005 * std::abs(fine.w0))
    fail(ErrorCode::mesh_too_coarse, "doubling the mesh moved H~_0(0) by more than 0.5%");
  return {coarse.w0, coarse.source_integral};
}

inline double h_tilde_center(const CriticalPair& pair, std::size_t n) {
  return h_tilde_center_full(pair, n).value;
}

}  // namespace lelab
