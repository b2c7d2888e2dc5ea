#include <doctest.h>

#include <cmath>
#include <numbers>

#include "anderson/equilibrium.hpp"
#include "anderson/errors.hpp"
#include "anderson/rpse.hpp"
#include "oracles.hpp"

using namespace anderson;

namespace {

EigenSystem chain_eigensystem(int n, double sigma, std::uint64_t seed, int idx = 0) {
  return diagonalize(build_hamiltonian(sample_disorder({n, sigma, seed}, idx)));
}

// two-level fixture: eigenvalues {0, 1}, overlaps a rotation by pi/4
EigenSystem two_level_fixture() {
  EigenSystem eig;
  eig.eigenvalues = Eigen::Vector2d(0.0, 1.0);
  const double c = std::sqrt(0.5);
  eig.overlaps.resize(2, 2);
  eig.overlaps << c, -c,
                  c, c;
  return eig;
}

}  // namespace

TEST_CASE("rpse sampling basics") {
  RngStream rng(11, streams::kTest);
  SUBCASE("point simplex at n = 1") {
    const RpseState s = sample_rpse(1, rng);
    CHECK(s.populations[0] == 1.0);
    CHECK(s.phases[0] >= 0.0);
    CHECK(s.phases[0] < 2.0 * std::numbers::pi);
  }
  SUBCASE("populations are a normalized nonnegative simplex point") {
    for (const int n : {2, 3, 17, 64}) {
      const RpseState s = sample_rpse(n, rng);
      CHECK(s.populations.minCoeff() >= 0.0);
      CHECK(std::abs(s.populations.sum() - 1.0) <= 1e-12);
      CHECK(s.phases.minCoeff() >= 0.0);
      CHECK(s.phases.maxCoeff() < 2.0 * std::numbers::pi);
    }
  }
  SUBCASE("deterministic per stream") {
    RngStream r1(5, streams::kTest + 1);
    RngStream r2(5, streams::kTest + 1);
    const RpseState a = sample_rpse(16, r1);
    const RpseState b = sample_rpse(16, r2);
    CHECK((a.populations.array() == b.populations.array()).all());
    CHECK((a.phases.array() == b.phases.array()).all());
  }
}

TEST_CASE("simplex moments against quadrature and closed forms at n = 3") {
  // flat-density quadrature over the 2-simplex
  const double q_mean =
      oracles::simplex3_integral([](double p1, double, double) { return p1; }, 4000);
  const double q_second =
      oracles::simplex3_integral([](double p1, double, double) { return p1 * p1; }, 4000);
  CHECK(q_mean == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
  CHECK(q_second == doctest::Approx(2.0 / (3.0 * 4.0)).epsilon(1e-3));

  RngStream rng(21, streams::kTest);
  const int m = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const RpseState s = sample_rpse(3, rng);
    s1 += s.populations[0];
    s2 += s.populations[0] * s.populations[0];
  }
  CHECK(s1 / m == doctest::Approx(q_mean).epsilon(0.01));
  CHECK(s2 / m == doctest::Approx(q_second).epsilon(0.02));
}

TEST_CASE("simplex sampler matches the exact first and second moments at n = 32") {
  const int n = 32;
  const int m = 20000;
  RngStream rng(1234, streams::kTest);
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(n);  // P_k
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(n);  // P_k^2
  Eigen::VectorXd s4 = Eigen::VectorXd::Zero(n);  // P_k^4
  double pair_sum = 0.0, pair_sum_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    const RpseState s = sample_rpse(n, rng);
    const Eigen::VectorXd sq = s.populations.cwiseProduct(s.populations);
    s1 += s.populations;
    s2 += sq;
    s4 += sq.cwiseProduct(sq);
    const double pair_avg =
        (1.0 - s.populations.squaredNorm()) / (static_cast<double>(n) * (n - 1));
    pair_sum += pair_avg;
    pair_sum_sq += pair_avg * pair_avg;
  }
  const double target_mean = 1.0 / n;
  const double target_second = 2.0 / (static_cast<double>(n) * (n + 1));
  const double target_pair = 1.0 / (static_cast<double>(n) * (n + 1));
  for (int k = 0; k < n; ++k) {
    const double mean = s1[k] / m;
    const double se_mean =
        std::sqrt(std::max(0.0, s2[k] / m - mean * mean) / m);
    CHECK(std::abs(mean - target_mean) <= 3.0 * se_mean);

    const double second = s2[k] / m;
    const double se_second =
        std::sqrt(std::max(0.0, s4[k] / m - second * second) / m);
    CHECK(std::abs(second - target_second) <= 3.0 * se_second);
  }
  const double pair_mean = pair_sum / m;
  const double pair_se =
      std::sqrt(std::max(0.0, pair_sum_sq / m - pair_mean * pair_mean) / m);
  CHECK(std::abs(pair_mean - target_pair) <= 3.0 * pair_se);
}

TEST_CASE("time-averaged populations of one state") {
  const auto eig = chain_eigensystem(16, 0.5, 30);
  SUBCASE("single-eigenstate occupancy is stationary") {
    RpseState s;
    s.populations = Eigen::VectorXd::Zero(16);
    s.populations[4] = 1.0;
    s.phases = Eigen::VectorXd::Zero(16);
    const SiteDistribution dist = state_time_avg_populations(eig, s);
    for (int j = 0; j < 16; ++j) {
      CHECK(dist.probs[j] ==
            doctest::Approx(eig.overlaps(j, 4) * eig.overlaps(j, 4)).epsilon(1e-14));
    }
  }
  SUBCASE("uniform populations give exactly 1/n") {
    RpseState s;
    s.populations = Eigen::VectorXd::Constant(16, 1.0 / 16);
    s.phases = Eigen::VectorXd::Zero(16);
    const SiteDistribution dist = state_time_avg_populations(eig, s);
    CHECK((dist.probs.array() - 1.0 / 16).abs().maxCoeff() <= 1e-14);
  }
  SUBCASE("phases are irrelevant") {
    RngStream rng(3, streams::kTest);
    RpseState a = sample_rpse(16, rng);
    RpseState b = a;
    b.phases = Eigen::VectorXd::Constant(16, 1.234);
    const auto da = state_time_avg_populations(eig, a);
    const auto db = state_time_avg_populations(eig, b);
    CHECK((da.probs.array() == db.probs.array()).all());
  }
  SUBCASE("matches the trajectory oracle") {
    RngStream rng(13, streams::kTest);
    const RpseState s = sample_rpse(16, rng);
    const SiteDistribution closed = state_time_avg_populations(eig, s);
    const TimeGrid grid{1e3, 2e5, 4000, 7};
    const SiteDistribution sampled =
        trajectory_time_average(eig, s.to_pure_state(), grid);
    CHECK((closed.probs - sampled.probs).cwiseAbs().maxCoeff() <= 1e-2);
  }
}

TEST_CASE("per-state fluctuation amplitude") {
  SUBCASE("stationary states do not fluctuate") {
    const auto eig = chain_eigensystem(12, 0.5, 40);
    RpseState s;
    s.populations = Eigen::VectorXd::Zero(12);
    s.populations[3] = 1.0;
    s.phases = Eigen::VectorXd::Zero(12);
    for (int j = 0; j < 12; ++j) {
      CHECK(state_fluctuation_amplitude(eig, s, j) == 0.0);
    }
  }
  SUBCASE("two-level rotation fixture evaluates to 1/8 by hand") {
    const auto eig = two_level_fixture();
    RpseState s;
    s.populations = Eigen::Vector2d(0.5, 0.5);
    s.phases = Eigen::Vector2d(0.0, 0.0);
    CHECK(state_fluctuation_amplitude(eig, s, 0) ==
          doctest::Approx(0.125).epsilon(1e-14));
    CHECK(state_fluctuation_amplitude(eig, s, 1) ==
          doctest::Approx(0.125).epsilon(1e-14));
  }
  SUBCASE("two-level fixture cross-checked by explicit time integration") {
    const auto eig = two_level_fixture();
    RpseState s;
    s.populations = Eigen::Vector2d(0.5, 0.5);
    s.phases = Eigen::Vector2d(0.3, 5.1);
    const PureState psi = s.to_pure_state();
    const SiteDistribution mean = state_time_avg_populations(eig, s);
    const TimeGrid grid{0.0, 2e5, 200000, 2};
    double acc = 0.0;
    for (const double t : sample_times(grid)) {
      const SiteDistribution inst = site_populations(eig, evolve(eig, psi, t));
      acc += (inst.probs[0] - mean.probs[0]) * (inst.probs[0] - mean.probs[0]);
    }
    acc /= 200000.0;
    CHECK(acc == doctest::Approx(state_fluctuation_amplitude(eig, s, 0)).epsilon(1e-2));
  }
}

TEST_CASE("closed-form ensemble moments on fixtures") {
  SUBCASE("site equal to an eigenstate has zero fluctuation amplitude") {
    const auto eig = oracles::diagonal_fixture(10);
    for (int j = 0; j < 10; ++j) {
      CHECK(std::abs(ensemble_fluctuation_amplitude(eig, j)) <= 1e-16);
      CHECK(ensemble_variance(eig, j) ==
            doctest::Approx((1.0 - 0.1) / (10.0 * 11.0)).epsilon(1e-14));
    }
  }
  SUBCASE("uniform overlaps maximize fluctuations and kill the variance") {
    const auto eig = oracles::hadamard_fixture(16);
    for (int j = 0; j < 16; ++j) {
      CHECK(ensemble_fluctuation_amplitude(eig, j) ==
            doctest::Approx((1.0 - 1.0 / 16) / (16.0 * 17.0)).epsilon(1e-13));
      CHECK(std::abs(ensemble_variance(eig, j)) <= 1e-16);
    }
  }
  SUBCASE("two-level rotation fixture gives 1/12") {
    const auto eig = two_level_fixture();
    CHECK(ensemble_fluctuation_amplitude(eig, 0) ==
          doctest::Approx(1.0 / 12).epsilon(1e-14));
    CHECK(circle_budget(2) == doctest::Approx(1.0 / 12).epsilon(1e-15));
  }
}

TEST_CASE("per-site circle identity on random orthogonal matrices and chains") {
  RngStream rng(77, streams::kTest);
  for (int rep = 0; rep < 4; ++rep) {
    const int n = 8 + 13 * rep;
    const auto eig = oracles::synthetic_eigensystem(oracles::haar_orthogonal(n, rng));
    const double budget = circle_budget(n);
    for (int j = 0; j < n; ++j) {
      const double fluct = ensemble_fluctuation_amplitude(eig, j);
      const double var = ensemble_variance(eig, j);
      CHECK(std::abs(fluct + var - budget) <= 1e-14);
      CHECK(fluct >= -1e-16);
      CHECK(var >= -1e-16);
    }
    const CircleLaw law = circle_law(eig);
    CHECK(std::abs(law.site_avg_fluct + law.site_avg_var - law.budget) <= 1e-14);
  }
  const auto eig = chain_eigensystem(40, 0.7, 50);
  const CircleLaw law = circle_law(eig);
  const EnsembleMoments moments = ensemble_moments(eig);
  CHECK(law.site_avg_fluct == doctest::Approx(moments.fluct_amplitude_site_avg).epsilon(1e-13));
  CHECK(law.site_avg_var == doctest::Approx(moments.ensemble_variance_site_avg).epsilon(1e-13));
  CHECK((moments.fluct_amplitude.array() + moments.ensemble_variance.array() -
         moments.circle_budget)
            .abs()
            .maxCoeff() <= 1e-14);
}

TEST_CASE("monte carlo verification of the closed forms at n = 8") {
  const auto eig = chain_eigensystem(8, 0.5, 60);
  const McMoments mc = mc_verify_moments(eig, 10000, 123);
  REQUIRE(mc.samples == 10000);
  for (int j = 0; j < 8; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    CHECK(std::abs(mc.mean_population[sj].value - 1.0 / 8) <=
          3.0 * mc.mean_population[sj].std_error);
    CHECK(std::abs(mc.fluct_amplitude[sj].value - ensemble_fluctuation_amplitude(eig, j)) <=
          3.0 * mc.fluct_amplitude[sj].std_error);
    const double target_var = ensemble_variance(eig, j);
    const double tol =
        std::max(0.05 * target_var, 3.0 * mc.population_variance[sj].std_error);
    CHECK(std::abs(mc.population_variance[sj].value - target_var) <= tol);
  }
}

TEST_CASE("monte carlo estimates are deterministic and thread-count invariant") {
  const auto eig = chain_eigensystem(6, 0.8, 61);
  const McMoments a = mc_verify_moments(eig, 2048, 9, 1);
  const McMoments b = mc_verify_moments(eig, 2048, 9, 3);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(a.mean_population[j].value == b.mean_population[j].value);
    CHECK(a.fluct_amplitude[j].value == b.fluct_amplitude[j].value);
    CHECK(a.population_variance[j].value == b.population_variance[j].value);
    CHECK(a.mean_population[j].std_error == b.mean_population[j].std_error);
  }
  CHECK_THROWS_AS(mc_verify_moments(eig, 99, 1), ConfigError);
}
