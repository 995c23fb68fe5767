#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "lelab/greens.hpp"
#include "support/oracles.hpp"

using namespace lelab;
using Catch::Approx;

namespace {

Point random_direction(std::mt19937_64& rng, int N) {
  std::normal_distribution<double> gauss;
  Point d(N);
  double nn = 0.0;
  do {
    for (int i = 0; i < N; ++i) d[i] = gauss(rng);
    nn = norm(d);
  } while (nn < 1e-6);
  for (int i = 0; i < N; ++i) d[i] /= nn;
  return d;
}

Point random_point(std::mt19937_64& rng, int N, double r_lo, double r_hi) {
  std::uniform_real_distribution<double> unif(r_lo, r_hi);
  Point d = random_direction(rng, N);
  const double r = unif(rng);
  for (int i = 0; i < N; ++i) d[i] *= r;
  return d;
}

}  // namespace

TEST_CASE("greens_ball with source at the center") {
  std::mt19937_64 rng(11);
  for (int N : {4, 5}) {
    const double gamma = 1.0 / ((N - 2.0) * sphere_area(N));
    const Point origin(N, 0.0);
    for (int t = 0; t < 20; ++t) {
      const Point x = random_point(rng, N, 0.05, 0.95);
      const auto [G, H] = greens_ball(N, x, origin);
      CHECK(H == Approx(gamma).epsilon(1e-13));
      CHECK(G == Approx(gamma * (std::pow(norm(x), 2.0 - N) - 1.0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("greens_ball vanishes on the boundary") {
  std::mt19937_64 rng(12);
  for (int N : {4, 5}) {
    for (int t = 0; t < 50; ++t) {
      const Point x = random_direction(rng, N);  // |x| = 1
      const Point y = random_point(rng, N, 0.05, 0.9);
      const auto [G, H] = greens_ball(N, x, y);
      CHECK(std::abs(G) <= 1e-12);
      CHECK(H > 0.0);
    }
  }
}

TEST_CASE("greens_ball regular part is symmetric") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const int N = (t % 2 == 0) ? 4 : 5;
    const Point x = random_point(rng, N, 0.05, 0.95);
    const Point y = random_point(rng, N, 0.05, 0.95);
    if (dist(x, y) < 1e-6) continue;
    const double hxy = greens_ball(N, x, y).second;
    const double hyx = greens_ball(N, y, x).second;
    CHECK(hxy == Approx(hyx).epsilon(1e-12));
  }
}

TEST_CASE("greens_ball input guards") {
  const Point a{0.3, 0.0, 0.0, 0.0};
  CHECK_THROWS_MATCHES(greens_ball(4, a, a), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::coincident_points;
                       }));
  const Point outside{1.5, 0.0, 0.0, 0.0};
  CHECK_THROWS_MATCHES(greens_ball(4, outside, a), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::outside_ball;
                       }));
}

TEST_CASE("regular_part_exterior hand evaluation") {
  const PuncturedBall pb(0.1, 4);
  const Point x{0.5, 0.0, 0.0, 0.0};
  const KernelValue kv = regular_part_exterior(pb, x, x);
  const double gamma4 = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi);
  CHECK(kv.value == Approx(gamma4 * 0.01 / (0.24 * 0.24)).epsilon(1e-12));
  CHECK(kv.value == Approx(4.3977e-3).epsilon(1e-4));
  CHECK(kv.error_bound == 0.0);
}

TEST_CASE("regular_part_exterior boundary identity at |x| = eps") {
  std::mt19937_64 rng(14);
  for (int N : {4, 5}) {
    const PuncturedBall pb(0.1, N);
    const double gamma = 1.0 / ((N - 2.0) * sphere_area(N));
    for (int t = 0; t < 25; ++t) {
      Point x = random_direction(rng, N);
      for (int i = 0; i < N; ++i) x[i] *= pb.epsilon;
      const Point y = random_point(rng, N, 0.2, 0.9);
      const KernelValue kv = regular_part_exterior(pb, x, y);
      CHECK(kv.value == Approx(gamma * std::pow(dist(x, y), 2.0 - N)).epsilon(1e-12));
    }
  }
}

TEST_CASE("regular_part_exterior symmetry and hole guard") {
  std::mt19937_64 rng(15);
  const PuncturedBall pb(0.05, 5);
  for (int t = 0; t < 100; ++t) {
    const Point x = random_point(rng, 5, 0.08, 0.95);
    const Point y = random_point(rng, 5, 0.08, 0.95);
    const double a = regular_part_exterior(pb, x, y).value;
    const double b = regular_part_exterior(pb, y, x).value;
    CHECK(a == Approx(b).epsilon(1e-12));
  }
  const Point inside{0.01, 0.0, 0.0, 0.0, 0.0};
  const Point ok{0.5, 0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_MATCHES(regular_part_exterior(pb, inside, ok), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::inside_hole;
                       }));
}

TEST_CASE("regular_part_punctured small-hole limit") {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 10; ++t) {
    const Point x = random_point(rng, 4, 0.3, 0.9);
    const Point y = random_point(rng, 4, 0.3, 0.9);
    if (dist(x, y) < 0.05) continue;
    const double H = greens_ball(4, x, y).second;
    const PuncturedBall tiny(1e-5, 4);
    const KernelValue kv = regular_part_punctured(tiny, x, y);
    CHECK(kv.value == Approx(H).epsilon(1e-8));
    CHECK(kv.error_bound <= 1e-7);
  }
}

TEST_CASE("regular_part_punctured keeps Green's function nonnegative") {
  std::mt19937_64 rng(17);
  const PuncturedBall pb(0.05, 4);
  const double gamma4 = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi);
  for (int t = 0; t < 50; ++t) {
    const Point x = random_point(rng, 4, 0.08, 0.97);
    const Point y = random_point(rng, 4, 0.08, 0.97);
    if (dist(x, y) < 1e-4) continue;
    const KernelValue kv = regular_part_punctured(pb, x, y);
    CHECK(gamma4 * std::pow(dist(x, y), -2.0) - kv.value + kv.error_bound >= 0.0);
  }
}

TEST_CASE("composite regular part agrees with the direct harmonic solve") {
  // The modal solve is the independent route: separation of variables with
  // closed-form radial modes, no image charges anywhere.
  std::mt19937_64 rng(18);
  const PuncturedBall pb(0.05, 4);

  // Oracle self-check: a negligible hole reproduces the ball regular part.
  {
    const Point x{0.4, 0.1, 0.0, 0.0};
    const Point y{-0.2, 0.3, 0.1, 0.0};
    const double direct = testing::annulus_regular_part_direct(4, 1e-7, x, y);
    CHECK(direct == Approx(greens_ball(4, x, y).second).epsilon(1e-10));
  }

  for (int t = 0; t < 20; ++t) {
    const Point x = random_point(rng, 4, 0.15, 0.85);
    const Point y = random_point(rng, 4, 0.15, 0.85);
    const KernelValue kv = regular_part_punctured(pb, x, y);
    const double direct = testing::annulus_regular_part_direct(4, pb.epsilon, x, y);
    CHECK(std::abs(kv.value - direct) <= kv.error_bound);
  }
}

TEST_CASE("gamma_tilde value and behavior") {
  const CriticalPair pair = critical_pair(5, 1.2);
  const double g5 = 1.0 / (8.0 * std::numbers::pi * std::numbers::pi);
  const double expected = std::pow(g5, 1.2) / (1.6 * 1.4);
  CHECK(gamma_tilde(pair) == Approx(expected).epsilon(1e-13));
  CHECK(gamma_tilde(pair) == Approx(2.36e-3).epsilon(5e-3));

  for (int N : {4, 5, 6}) {
    const double p_hi = (N - 1.0) / (N - 2.0);
    for (double f : {0.15, 0.5, 0.85}) {
      CHECK(gamma_tilde(critical_pair(N, 1.0 + f * (p_hi - 1.0))) > 0.0);
    }
  }

  // Blow-up of the constant as p approaches N/(N-2) from below.
  const CriticalPair nearly = critical_pair_unchecked(5, 5.0 / 3.0 - 1e-6);
  CHECK(std::isfinite(gamma_tilde(nearly)));
  CHECK(gamma_tilde(nearly) > 1e3 * gamma_tilde(pair));
}

TEST_CASE("h_tilde_center positivity and mesh convergence") {
  const CriticalPair pair = critical_pair(5, 1.2);
  const double h4 = h_tilde_center(pair, 4000);
  const double h8 = h_tilde_center(pair, 8000);
  const double h16 = h_tilde_center(pair, 16000);

  CHECK(h4 > gamma_tilde(pair));  // maximum principle: source > 0 in (0,1)
  CHECK(h4 > 0.0);

  const double d1 = h8 - h4;
  const double d2 = h16 - h8;
  REQUIRE(d2 != 0.0);
  const double ratio = d1 / d2;
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);

  CHECK_THROWS_AS(h_tilde_center(pair, 100), Error);
}

TEST_CASE("h_tilde_center source quadrature against tanh-sinh") {
  const CriticalPair pair = critical_pair(5, 1.2);
  const HTildeResult res = h_tilde_center_full(pair, 8000);
  const double independent =
      sphere_area(5) * testing::tanh_sinh(
                           [&](double r) {
                             return detail::h_tilde_source(pair, r) * std::pow(r, 4.0);
                           },
                           0.0, 1.0);
  CHECK(res.source_integral == Approx(independent).epsilon(1e-8));
}

TEST_CASE("h_tilde_center regression fixture (N=5, p=1.2)") {
  // Frozen from a Richardson study over n in {4000, 8000, 16000, 32000}.
  const CriticalPair pair = critical_pair(5, 1.2);
  const double h8 = h_tilde_center(pair, 8000);
  const double h16 = h_tilde_center(pair, 16000);
  const double extrapolated = h16 + (h16 - h8) / 3.0;
  CHECK(extrapolated == Approx(0.0033669855).epsilon(1e-6));
  CHECK(h8 == Approx(0.0033669855).epsilon(1e-4));
}
