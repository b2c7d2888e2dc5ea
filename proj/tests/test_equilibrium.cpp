#include <doctest.h>

#include <cmath>

#include "anderson/equilibrium.hpp"
#include "anderson/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace anderson;

namespace {

EigenSystem chain_eigensystem(int n, double sigma, std::uint64_t seed, int idx = 0) {
  return diagonalize(build_hamiltonian(sample_disorder({n, sigma, seed}, idx)));
}

EquilibriumProfile uniform_profile(int n) {
  EquilibriumProfile p;
  p.per_origin = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  p.displacement_avg = Eigen::VectorXd::Constant(n, 1.0 / n);
  return p;
}

EquilibriumProfile delta_profile(int n) {
  EquilibriumProfile p;
  p.per_origin = Eigen::MatrixXd::Identity(n, n);
  p.displacement_avg = Eigen::VectorXd::Zero(n);
  p.displacement_avg[0] = 1.0;
  return p;
}

}  // namespace

TEST_CASE("time-averaged conditional on the limit fixtures") {
  SUBCASE("diagonal fixture pins the excitation at the origin") {
    const auto eig = oracles::diagonal_fixture(12);
    const SiteDistribution dist = time_avg_conditional(eig, 7);
    CHECK(dist.probs[7] == 1.0);
    CHECK(dist.probs.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("uniform-overlap fixture spreads it evenly") {
    const auto eig = oracles::hadamard_fixture(16);
    const SiteDistribution dist = time_avg_conditional(eig, 3);
    CHECK((dist.probs.array() - 1.0 / 16).abs().maxCoeff() <= 1e-14);
  }
  SUBCASE("degenerate spectra are rejected, not silently averaged") {
    auto eig = oracles::diagonal_fixture(6);
    eig.eigenvalues[3] = eig.eigenvalues[2];
    CHECK_THROWS_AS(time_avg_conditional(eig, 0), DegenerateSpectrumError);
    CHECK_THROWS_AS(displacement_profile(eig), DegenerateSpectrumError);
  }
}

TEST_CASE("closed form agrees with the trajectory-sampling oracle") {
  const auto eig = chain_eigensystem(64, 0.5, 42);
  const int j0 = 20;
  const SiteDistribution closed = time_avg_conditional(eig, j0);
  const TimeGrid grid{1e3, 1e5, 4000, 1};
  const SiteDistribution sampled =
      trajectory_time_average(eig, localized_state(eig, j0), grid, 2);
  CHECK((closed.probs - sampled.probs).cwiseAbs().maxCoeff() <= 1e-2);
}

TEST_CASE("displacement profile on fixtures and real chains") {
  SUBCASE("uniform fixture gives a flat profile") {
    const auto profile = displacement_profile(oracles::hadamard_fixture(8));
    CHECK((profile.displacement_avg.array() - 0.125).abs().maxCoeff() <= 1e-14);
    for (int j0 = 0; j0 < 8; ++j0) {
      CHECK(std::abs(profile.per_origin.row(j0).sum() - 1.0) <= 1e-12);
    }
  }
  SUBCASE("profiles normalize on disordered chains") {
    const auto profile = displacement_profile(chain_eigensystem(48, 0.8, 3));
    CHECK(std::abs(profile.displacement_avg.sum() - 1.0) <= 1e-10);
    CHECK(profile.displacement_avg.minCoeff() >= 0.0);
  }
  SUBCASE("strong disorder decays away from the origin after smoothing") {
    const auto profile = displacement_profile(chain_eigensystem(100, 1.0, 8));
    const int n = 100;
    // moving average over +-5 displacement bins, positive side
    auto smoothed = [&](int d) {
      double sum = 0.0;
      for (int w = -5; w <= 5; ++w) {
        sum += profile.displacement_avg[((d + w) % n + n) % n];
      }
      return sum / 11.0;
    };
    for (int d = 0; d + 1 <= n / 2 - 6; ++d) {
      CHECK(smoothed(d + 1) <= smoothed(d) * 1.02 + 1e-12);
    }
  }
}

TEST_CASE("equilibrium mssd") {
  CHECK(equilibrium_mssd(uniform_profile(10)) == doctest::Approx(8.5).epsilon(1e-13));
  CHECK(equilibrium_mssd(delta_profile(64)) == 0.0);
  // even n: domain -n/2 .. n/2-1 gives (n^2+2)/12; odd n is symmetric, (n^2-1)/12
  CHECK(equilibrium_mssd(uniform_profile(16)) ==
        doctest::Approx((16.0 * 16.0 + 2.0) / 12.0).epsilon(1e-12));
  CHECK(equilibrium_mssd(uniform_profile(9)) ==
        doctest::Approx((9.0 * 9.0 - 1.0) / 12.0).epsilon(1e-12));
  const auto profile = displacement_profile(chain_eigensystem(32, 0.3, 5));
  const double mssd = equilibrium_mssd(profile);
  CHECK(mssd >= 0.0);
  CHECK(mssd <= (32.0 * 32.0 + 2.0) / 12.0 + 1e-6);
}

TEST_CASE("mean ipr") {
  CHECK(mean_ipr(oracles::hadamard_fixture(16)) == doctest::Approx(1.0 / 16).epsilon(1e-13));
  CHECK(mean_ipr(oracles::diagonal_fixture(9)) == 1.0);

  // hand-diagonalizable 3x3: eigenvectors (1,-1,0)/sqrt2, (1,1,0)/sqrt2, e3
  Eigen::MatrixXd m(3, 3);
  m << 2, 1, 0,
       1, 2, 0,
       0, 0, 5;
  const auto eig = diagonalize(m);
  // two IPRs of 1/2 and one of 1: mean 2/3
  CHECK(mean_ipr(eig) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  for (const double sigma : {0.1, 1.0, 10.0}) {
    const double ipr = mean_ipr(chain_eigensystem(40, sigma, 6));
    CHECK(ipr >= 1.0 / 40 - 1e-9);
    CHECK(ipr <= 1.0 + 1e-9);
  }
}

TEST_CASE("survival identity holds to 1e-12 on chains and random orthogonals") {
  for (int i = 0; i < 5; ++i) {
    const auto eig = chain_eigensystem(50, 0.4 + 0.2 * i, 100 + static_cast<std::uint64_t>(i));
    CHECK(survival_identity_gap(eig) <= 1e-12);
  }
  RngStream rng(5, streams::kTest);
  for (int i = 0; i < 5; ++i) {
    const auto eig = oracles::synthetic_eigensystem(oracles::haar_orthogonal(33, rng));
    CHECK(survival_identity_gap(eig) <= 1e-12);
  }
}

TEST_CASE("mssd / participation-ratio relation in the limit regimes") {
  SUBCASE("weak-disorder (uniform) limit: the relation fails as expected") {
    const auto rel = pr_mssd_relation(oracles::uniform_overlap_fixture(10));
    CHECK(rel.sqrt_mssd == doctest::Approx(std::sqrt(8.5)).epsilon(1e-12));
    CHECK(rel.sqrt2_over_ipr == doctest::Approx(std::sqrt(2.0) * 10).epsilon(1e-12));
  }
  SUBCASE("strong-disorder (diagonal) limit") {
    const auto rel = pr_mssd_relation(oracles::diagonal_fixture(12));
    CHECK(rel.sqrt_mssd == 0.0);
    CHECK(rel.sqrt2_over_ipr == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("intermediate disorder keeps the two estimates within a factor of 3") {
    const auto rel = pr_mssd_relation(chain_eigensystem(1000, 0.5, 2));
    CHECK(rel.sqrt_mssd / rel.sqrt2_over_ipr < 3.0);
    CHECK(rel.sqrt2_over_ipr / rel.sqrt_mssd < 3.0);
  }
}

TEST_CASE("effective states from the entropy measure") {
  SUBCASE("uniform fixture saturates at n") {
    CHECK(effective_states(oracles::hadamard_fixture(16), EntropyMode::entropy_of_average) ==
          doctest::Approx(16.0).epsilon(1e-9));
  }
  SUBCASE("diagonal fixture collapses to 1") {
    CHECK(effective_states(oracles::diagonal_fixture(16), EntropyMode::entropy_of_average) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("average_of_entropy requires a grid and stays in [1, n]") {
    const auto eig = chain_eigensystem(16, 0.5, 9);
    CHECK_THROWS_AS(effective_states(eig, EntropyMode::average_of_entropy), ConfigError);
    const TimeGrid grid{100.0, 5000.0, 200, 3};
    const double ne = effective_states(eig, EntropyMode::average_of_entropy, &grid);
    CHECK(ne >= 1.0);
    CHECK(ne <= 16.0 + 1e-9);
  }
  SUBCASE("bounds on disordered chains") {
    for (const double sigma : {0.2, 2.0}) {
      const double ne =
          effective_states(chain_eigensystem(36, sigma, 14), EntropyMode::entropy_of_average);
      CHECK(ne >= 1.0 - 1e-9);
      CHECK(ne <= 36.0 + 1e-9);
    }
  }
}

TEST_CASE("strong disorder confines, weak disorder delocalizes") {
  SUBCASE("sqrt(MSSD) under 3 sites at sigma in {10, 20, 50}, n = 200") {
    for (const double sigma : {10.0, 20.0, 50.0}) {
      const auto eig = chain_eigensystem(200, sigma, 271);
      const double mssd = equilibrium_mssd(displacement_profile(eig));
      CHECK(std::sqrt(mssd) < 3.0);
    }
  }
  SUBCASE("sigma = 0.01 at n = 100 is within 25% of full delocalization") {
    const auto eig = chain_eigensystem(100, 0.01, 271);
    const double mssd = equilibrium_mssd(displacement_profile(eig));
    const double full = (100.0 * 100.0 + 2.0) / 12.0;
    CHECK(std::abs(mssd - full) <= 0.25 * full);
  }
}

TEST_CASE("localization length saturates in the chain length") {
  // once the localization length is well under n, growing the chain does not
  // move the median MSSD (beyond realization spread)
  auto median_mssd = [](int n) {
    std::vector<double> values;
    for (int r = 0; r < 3; ++r) {
      values.push_back(
          equilibrium_mssd(displacement_profile(chain_eigensystem(n, 1.0, 606, r))));
    }
    std::sort(values.begin(), values.end());
    return values[1];
  };
  const double small = median_mssd(384);
  const double large = median_mssd(768);
  CHECK(std::abs(large - small) <= 0.35 * small);
}

TEST_CASE("localization metrics bundle is consistent") {
  const auto eig = chain_eigensystem(48, 0.6, 19);
  const auto m = localization_metrics(eig);
  CHECK(m.sqrt_mssd == doctest::Approx(std::sqrt(m.equilibrium_mssd)).epsilon(1e-14));
  CHECK(m.sqrt2_over_ipr == doctest::Approx(std::sqrt(2.0) / m.mean_ipr).epsilon(1e-14));
  CHECK(m.equilibrium_mssd == doctest::Approx(equilibrium_mssd(displacement_profile(eig))));
  CHECK(m.mean_ipr == doctest::Approx(mean_ipr(eig)));
}

TEST_CASE("profile csv export round trip") {
  const auto dir = support::temp_dir("profile_csv");
  const auto profile = displacement_profile(chain_eigensystem(17, 0.5, 33));
  const auto path = dir / "profile.csv";
  export_profile_csv(profile, path.string());
  const auto csv = support::read_csv(path);
  REQUIRE(csv.rows.size() == 17);
  CHECK(csv.header == std::vector<std::string>{"dj", "rho_bar"});
  double total = 0.0;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) total += csv.value(i, "rho_bar");
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  // displacement labels run -floor(n/2) .. ceil(n/2)-1 and map back cyclically
  CHECK(csv.rows.front()[0] == "-8");
  CHECK(csv.rows.back()[0] == "8");
  const double at_zero = csv.value(8, "rho_bar");
  CHECK(at_zero == doctest::Approx(profile.displacement_avg[0]).epsilon(1e-15));
}
