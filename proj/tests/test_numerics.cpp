#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "lelab/numerics.hpp"

using namespace lelab;
using Catch::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("build_grid uniform matches hand nodes") {
  const RadialGrid g = build_grid(0.0, 1.0, 9, GridKind::uniform);
  REQUIRE(g.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(g[i] == Approx(0.125 * i).margin(1e-15));
  CHECK(g.nodes.front() == 0.0);
  CHECK(g.nodes.back() == 1.0);
}

TEST_CASE("build_grid geometric has constant ratio") {
  const RadialGrid g = build_grid(0.1, 10.0, 8, GridKind::geometric);
  const double expected = std::pow(100.0, 1.0 / 7.0);
  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    CHECK(g[i + 1] / g[i] == Approx(expected).epsilon(1e-12));
}

TEST_CASE("build_grid rejects bad input") {
  CHECK_THROWS_MATCHES(build_grid(1.0, 0.5, 16, GridKind::uniform), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::invalid_range;
                       }));
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 7, GridKind::uniform), Error);
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 32, GridKind::geometric), Error);
}

TEST_CASE("integrate_radial unit ball volume") {
  const RadialGrid g = build_grid(0.0, 1.0, 201, GridKind::uniform);
  std::vector<double> f(g.size(), 1.0);
  CHECK(integrate_radial(g, f, 3) == Approx(4.0 * kPi / 3.0).epsilon(1e-10));
}

TEST_CASE("integrate_radial power-law tail correction") {
  // |S^4| int_1^inf r^{-6} r^4 dr = |S^4| = 8 pi^2 / 3, grid truncated at 40.
  const RadialGrid g = build_grid(1.0, 40.0, 2001, GridKind::geometric);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::pow(g[i], -6.0);
  const double expected = 8.0 * kPi * kPi / 3.0;
  CHECK(integrate_radial(g, f, 5, 6.0) == Approx(expected).epsilon(1e-8));
}

TEST_CASE("integrate_radial rejects marginally divergent tail") {
  const RadialGrid g = build_grid(1.0, 40.0, 64, GridKind::geometric);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::pow(g[i], -4.0);
  CHECK_THROWS_MATCHES(integrate_radial(g, f, 5, 4.0), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::nonconvergent_tail;
                       }));
}

TEST_CASE("integrate_radial is linear and monotone") {
  const RadialGrid g = build_grid(0.5, 20.0, 321, GridKind::geometric);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> f(g.size()), extra(g.size()), sum(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      f[i] = unif(rng);
      extra[i] = unif(rng);
      sum[i] = f[i] + extra[i];
    }
    const double If = integrate_radial(g, f, 4);
    const double Ie = integrate_radial(g, extra, 4);
    const double Is = integrate_radial(g, sum, 4);
    CHECK(Is == Approx(If + Ie).epsilon(1e-13));
    CHECK(Is >= If);  // extra >= 0 pointwise
    CHECK(If >= 0.0);
  }
}

TEST_CASE("solve_banded_linear identity") {
  BandedMatrix A(6, 1, 1);
  for (std::size_t i = 0; i < 6; ++i) A.at(i, i) = 1.0;
  const std::vector<double> b{1, -2, 3, -4, 5, -6};
  const std::vector<double> x = solve_banded_linear(A, b);
  for (std::size_t i = 0; i < 6; ++i) CHECK(x[i] == Approx(b[i]));
}

TEST_CASE("solve_banded_linear discrete Dirichlet Laplacian") {
  // -u'' = 1 on (0,1), u(0)=u(1)=0: the 3-point scheme is exact for the
  // quadratic solution x(1-x)/2.
  const std::size_t m = 63;
  const double h = 1.0 / static_cast<double>(m + 1);
  BandedMatrix A(m, 1, 1);
  std::vector<double> b(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    A.at(i, i) = 2.0 / (h * h);
    if (i > 0) A.at(i, i - 1) = -1.0 / (h * h);
    if (i + 1 < m) A.at(i, i + 1) = -1.0 / (h * h);
  }
  const std::vector<double> x = solve_banded_linear(A, b);
  for (std::size_t i = 0; i < m; ++i) {
    const double xi = h * static_cast<double>(i + 1);
    CHECK(x[i] == Approx(0.5 * xi * (1.0 - xi)).margin(1e-12));
  }
}

TEST_CASE("solve_banded_linear flags zero matrix") {
  BandedMatrix A(4, 1, 1);
  CHECK_THROWS_MATCHES(solve_banded_linear(A, {1, 1, 1, 1}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::singular_matrix;
                       }));
}

TEST_CASE("solve_banded_linear residual bound on random systems") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 40 + trial;
    const std::size_t kl = 1 + trial % 5;
    const std::size_t ku = 1 + (trial / 5) % 5;
    BandedMatrix A(n, kl, ku);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = unif(rng);
      for (std::size_t j = (i >= kl ? i - kl : 0); j <= std::min(n - 1, i + ku); ++j)
        A.at(i, j) = unif(rng);
      A.at(i, i) += 6.0;  // diagonally dominant, hence well-conditioned
    }
    const std::vector<double> x = solve_banded_linear(A, b);
    const std::vector<double> Ax = A.apply(x);
    double res = 0.0, xn = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      res = std::max(res, std::abs(Ax[i] - b[i]));
      xn = std::max(xn, std::abs(x[i]));
      bn = std::max(bn, std::abs(b[i]));
    }
    CHECK(res <= 1e-10 * (A.inf_norm() * xn + bn));
  }
}

namespace {

BandedMatrix scalar_jacobian(double j) {
  BandedMatrix J(1, 0, 0);
  J.at(0, 0) = j;
  return J;
}

}  // namespace

TEST_CASE("newton_solve classic quadratic") {
  const auto res = newton_solve(
      [](const std::vector<double>& x) { return std::vector<double>{x[0] * x[0] - 4.0}; },
      [](const std::vector<double>& x) { return scalar_jacobian(2.0 * x[0]); }, {3.0}, 1e-12, 50);
  CHECK(res.x[0] == Approx(2.0).margin(1e-10));
  CHECK(res.iterations <= 6);
  CHECK(res.residual_norm <= 1e-12);
}

TEST_CASE("newton_solve linear case converges in one step") {
  const auto res = newton_solve([](const std::vector<double>& x) { return x; },
                                [](const std::vector<double>&) { return scalar_jacobian(1.0); },
                                {5.0}, 1e-14, 10);
  CHECK(res.x[0] == Approx(0.0).margin(1e-14));
  CHECK(res.iterations == 1);
}

TEST_CASE("newton_solve reports no convergence without a root") {
  CHECK_THROWS_MATCHES(
      newton_solve(
          [](const std::vector<double>& x) { return std::vector<double>{1.0 + x[0] * x[0]}; },
          [](const std::vector<double>& x) { return scalar_jacobian(2.0 * x[0]); }, {0.7}, 1e-10,
          25),
      Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
        return e.code() == ErrorCode::no_convergence || e.code() == ErrorCode::singular_matrix;
      }));
}

TEST_CASE("newton_solve result always satisfies the tolerance") {
  // Damped Newton on a stiff scalar problem; whatever path it takes, the
  // returned point must satisfy the residual contract.
  const auto res = newton_solve(
      [](const std::vector<double>& x) {
        return std::vector<double>{std::atan(x[0])};
      },
      [](const std::vector<double>& x) { return scalar_jacobian(1.0 / (1.0 + x[0] * x[0])); },
      {20.0}, 1e-11, 100);
  CHECK(std::abs(std::atan(res.x[0])) <= 1e-11);
}

TEST_CASE("fit_power_law recovers exact exponents") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {1e-3, 1e-2, 1e-1}) pts.emplace_back(x, 7.0 * std::pow(x, -0.4743));
  const PowerLawFit fit = fit_power_law(pts);
  CHECK(fit.exponent == Approx(-0.4743).margin(1e-12));
  CHECK(std::exp(fit.prefactor_log) == Approx(7.0).epsilon(1e-12));
  CHECK(fit.rms_residual <= 1e-13);
}

TEST_CASE("fit_power_law with multiplicative noise") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < 10; ++k) {
    const double x = std::pow(10.0, -3.0 + k * (3.0 / 9.0));
    pts.emplace_back(x, x * x * std::exp(noise(rng)));
  }
  const PowerLawFit fit = fit_power_law(pts);
  CHECK(std::abs(fit.exponent - 2.0) < 0.05);
}

TEST_CASE("fit_power_law degenerate windows") {
  std::vector<std::pair<double, double>> two{{1.0, 1.0}, {2.0, 4.0}};
  CHECK_THROWS_MATCHES(fit_power_law(two), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::degenerate_window;
                       }));
  std::vector<std::pair<double, double>> same{{1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}};
  CHECK_THROWS_AS(fit_power_law(same), Error);
}
