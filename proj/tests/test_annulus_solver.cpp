#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lelab/annulus_solver.hpp"
#include "lelab/reduced_energy.hpp"
#include "support/oracles.hpp"

using namespace lelab;
using Catch::Approx;

namespace {

const CriticalPair& pair512() {
  static const CriticalPair pair = critical_pair(5, 1.2);
  return pair;
}

const GroundState& gs512() {
  static const GroundState gs = solve_limit_system(pair512(), 160.0, 8000);
  return gs;
}

double d_saddle() {
  static const double d = [] {
    const EnergyConstants ec = energy_constants(gs512(), h_tilde_center(pair512(), 8000));
    return saddle_point(ec, gs512()).d_tilde;
  }();
  return d;
}

const SweepReport& reference_sweep() {
  static const SweepReport rep =
      continuation_sweep(gs512(), {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}, d_saddle());
  return rep;
}

// Signed count of sign changes of the discrete derivative.
int derivative_sign_changes(const std::vector<double>& w) {
  int changes = 0;
  int last = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double diff = w[i] - w[i - 1];
    const int sign = (diff > 0.0) - (diff < 0.0);
    if (sign != 0) {
      if (last != 0 && sign != last) ++changes;
      last = sign;
    }
  }
  return changes;
}

}  // namespace

TEST_CASE("zero initializer is rejected as the trivial solution") {
  const AnnulusMesh mesh = make_annulus_mesh(PuncturedBall(1e-2, 5), 6000);
  const std::vector<double> zero(mesh.grid->size(), 0.0);
  CHECK_THROWS_MATCHES(solve_system(pair512(), 1e-2, mesh, zero, zero), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::converged_to_zero;
                       }));
}

TEST_CASE("initializer validation") {
  const AnnulusMesh mesh = make_annulus_mesh(PuncturedBall(1e-2, 5), 6000);
  std::vector<double> bad(mesh.grid->size(), 1.0);  // nonzero boundary values
  CHECK_THROWS_AS(solve_system(pair512(), 1e-2, mesh, bad, bad), Error);
  std::vector<double> neg(mesh.grid->size(), 0.0);
  neg[5] = -1.0;
  CHECK_THROWS_AS(solve_system(pair512(), 1e-2, mesh, neg, neg), Error);
}

TEST_CASE("bubble-initialized solve concentrates near the hole") {
  const GroundState& gs = gs512();
  const double eps = 1e-2;
  const AnnulusMesh mesh = make_annulus_mesh(PuncturedBall(eps, 5), 8000);
  const BubbleParams params = make_bubble_params(pair512(), eps, d_saddle(), {}, 0.05);
  const ProjectedBubble pb = project_bubble(gs, params, mesh);
  const SolveResult sr = solve_system(pair512(), eps, mesh, pb.PcalU, pb.PV);

  CHECK(sr.residual_norm <= 1e-9);
  CHECK(sr.u.front() == 0.0);
  CHECK(sr.u.back() == 0.0);
  CHECK(sr.v.front() == 0.0);
  CHECK(sr.v.back() == 0.0);
  for (std::size_t i = 0; i < sr.u.size(); ++i) {
    REQUIRE(sr.u[i] >= 0.0);
    REQUIRE(sr.v[i] >= 0.0);
  }
  CHECK(sr.sup_u > 0.0);
  CHECK(sr.argmax_r >= eps);
  CHECK(sr.argmax_r <= 10.0 * params.mu);

  // One interior maximum per component.
  CHECK(derivative_sign_changes(sr.u) <= 1);
  CHECK(derivative_sign_changes(sr.v) <= 1);

  // Regression fixture for the reference configuration.
  CHECK(sr.sup_u == Approx(15.4415).epsilon(5e-3));
}

TEST_CASE("independent-stencil residual of converged solutions") {
  // Fourth-order Fornberg stencils applied to the second-order solution
  // measure the true ODE residual; it must stay below 1e-5 of the source.
  const GroundState& gs = gs512();
  for (double eps : {1e-2, 1e-3}) {
    const AnnulusMesh mesh = make_annulus_mesh(PuncturedBall(eps, 5), 12000);
    const BubbleParams params = make_bubble_params(pair512(), eps, d_saddle(), {}, 0.05);
    const ProjectedBubble pb = project_bubble(gs, params, mesh);
    const SolveResult sr = solve_system(pair512(), eps, mesh, pb.PcalU, pb.PV);

    const auto& r = mesh.grid->nodes;
    double src_u = 0.0, src_v = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      src_u = std::max(src_u, std::pow(sr.v[i], pair512().p));
      src_v = std::max(src_v, std::pow(sr.u[i], pair512().q));
    }
    double worst_u = 0.0, worst_v = 0.0;
    for (std::size_t i = 2; i + 2 < r.size(); i += 7) {
      const std::vector<double> xs(r.begin() + i - 2, r.begin() + i + 3);
      const std::vector<double> w2 = testing::fd_weights(r[i], xs, 2);
      const std::vector<double> w1 = testing::fd_weights(r[i], xs, 1);
      double upp = 0.0, up = 0.0, vpp = 0.0, vp = 0.0;
      for (int k = 0; k < 5; ++k) {
        upp += w2[k] * sr.u[i - 2 + k];
        up += w1[k] * sr.u[i - 2 + k];
        vpp += w2[k] * sr.v[i - 2 + k];
        vp += w1[k] * sr.v[i - 2 + k];
      }
      const double cu = upp + 4.0 / r[i] * up + std::pow(sr.v[i], pair512().p);
      const double cv = vpp + 4.0 / r[i] * vp + std::pow(sr.u[i], pair512().q);
      worst_u = std::max(worst_u, std::abs(cu));
      worst_v = std::max(worst_v, std::abs(cv));
    }
    CHECK(worst_u <= 1e-5 * src_u);
    CHECK(worst_v <= 1e-5 * src_v);
  }
}

TEST_CASE("continuation sweep: convergence, rate, and energy trend") {
  const SweepReport& rep = reference_sweep();
  REQUIRE(rep.failures.empty());
  REQUIRE(rep.results.size() == 5);

  for (const SolveResult& sr : rep.results) {
    CHECK(sr.residual_norm <= 1e-9);
    CHECK(sr.newton_iters <= 12);  // warm starts keep the step count small
  }

  // Blow-up rate of the maximum: slope within 15% of -alpha N/(q+1).
  const double predicted = -pair512().alpha * 5.0 / (pair512().q + 1.0);
  CHECK(predicted == Approx(-120.0 / 253.0).epsilon(1e-12));
  CHECK(std::abs(rep.rate_fit.exponent / predicted - 1.0) <= 0.15);

  // Energy excess trend: slope within 25% of alpha ((N-2)p - 2).
  const double predicted_energy = pair512().alpha * pair512().decay_u();
  CHECK(std::abs(rep.energy_fit.exponent / predicted_energy - 1.0) <= 0.25);

  // Ordered by decreasing epsilon, with monotone increasing sup_u.
  for (std::size_t i = 1; i < rep.results.size(); ++i) {
    CHECK(rep.results[i].epsilon < rep.results[i - 1].epsilon);
    CHECK(rep.results[i].sup_u > rep.results[i - 1].sup_u);
  }
}

TEST_CASE("sweep input validation") {
  CHECK_THROWS_AS(continuation_sweep(gs512(), {1e-3, 1e-2}, 0.4), Error);
  CHECK_THROWS_AS(continuation_sweep(gs512(), {0.5, 1e-2}, 0.4), Error);
  CHECK_THROWS_AS(continuation_sweep(gs512(), {1e-2, 1e-3}, -1.0), Error);
  CHECK_THROWS_AS(continuation_sweep(gs512(), {}, 0.4), Error);
}

TEST_CASE("profile similarity recovers an exact bubble") {
  const GroundState& gs = gs512();
  const double eps = 1e-3;
  const AnnulusMesh mesh = make_annulus_mesh(PuncturedBall(eps, 5), 8000);
  const double mu0 = std::pow(eps, pair512().alpha) * 0.7;

  SolveResult synthetic{pair512(), eps, mesh, {}, {}, 0.0, 0.0, 0.0, 0, 0.0, 0.0};
  synthetic.u.resize(mesh.grid->size());
  synthetic.v.assign(mesh.grid->size(), 0.0);
  const double amp = std::pow(mu0, -pair512().amp_u());
  for (std::size_t i = 0; i < synthetic.u.size(); ++i)
    synthetic.u[i] = amp * gs.u_at(mesh.grid->nodes[i] / mu0);

  const SimilarityResult sim = profile_similarity(synthetic, gs);
  CHECK(sim.mu_best == Approx(mu0).epsilon(1e-6));
  CHECK(sim.rel_distance <= 1e-9);
}

TEST_CASE("similarity diagnostics along the sweep") {
  const SweepReport& rep = reference_sweep();
  const GroundState& gs = gs512();
  double prev_dist = -1.0;
  bool monotone = true;
  for (const SolveResult& sr : rep.results) {
    const SimilarityResult sim = profile_similarity(sr, gs);
    // The concentration parameter stays admissible along the family.
    CHECK(sim.d_equivalent >= 0.05);
    CHECK(sim.d_equivalent <= 20.0);
    // The bubble shape explains the bulk of the profile.
    CHECK(sim.rel_distance < 0.5);
    // V-amplitude cross-scaling: sup_v mu^{N/(p+1)} against v(0). A trend
    // diagnostic: warn at the 2x band, assert only gross consistency, since
    // the u-fitted scale is biased low while the far field still matters.
    const double scaled = sr.sup_v * std::pow(sim.mu_best, 5.0 / 2.2);
    CHECK(scaled >= 0.1 * gs.shooting_v0);
    CHECK(scaled <= 10.0 * gs.shooting_v0);
    if (scaled < 0.5 * gs.shooting_v0 || scaled > 2.0 * gs.shooting_v0) {
      WARN("V-amplitude cross-scaling outside the 2x band at eps = "
           << sr.epsilon << ": " << scaled / gs.shooting_v0 << " v(0)");
    }
    if (prev_dist >= 0.0 && sim.rel_distance > prev_dist) monotone = false;
    prev_dist = sim.rel_distance;
  }
  if (!monotone) {
    WARN(
        "profile-similarity distance is not monotone along the sweep; the far-field window "
        "weighting makes this a diagnostic, not a failure");
  }
}
