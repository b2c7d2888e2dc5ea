#include "anderson/rpse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anderson/equilibrium.hpp"
#include "anderson/errors.hpp"
#include "parallel.hpp"

namespace anderson {

namespace {

constexpr long long kMcBlock = 512;

Eigen::VectorXd simplex_uniform(int n, RngStream& rng) {
  Eigen::VectorXd p(n);
  if (n == 1) {
    p[0] = 1.0;
    return p;
  }
  std::vector<double> cuts(static_cast<std::size_t>(n - 1));
  for (auto& u : cuts) u = rng.uniform01();
  std::sort(cuts.begin(), cuts.end());
  p[0] = cuts[0];
  for (int k = 1; k < n - 1; ++k) {
    p[k] = cuts[static_cast<std::size_t>(k)] - cuts[static_cast<std::size_t>(k - 1)];
  }
  p[n - 1] = 1.0 - cuts[static_cast<std::size_t>(n - 2)];
  return p;
}

// sum_k <j|E_k>^4 for every j.
Eigen::VectorXd site_spread(const EigenSystem& eig) {
  const Eigen::ArrayXXd sq = eig.overlaps.array().square();
  return (sq * sq).rowwise().sum().matrix();
}

}  // namespace

PureState RpseState::to_pure_state() const {
  PureState psi;
  psi.magnitudes = populations.cwiseSqrt();
  psi.phases = phases;
  return psi;
}

RpseState sample_rpse(int n, RngStream& rng) {
  if (n < 1) throw ConfigError("sample_rpse requires n >= 1");
  RpseState state;
  state.populations = simplex_uniform(n, rng);
  state.phases.resize(n);
  for (int k = 0; k < n; ++k) {
    state.phases[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return state;
}

SiteDistribution state_time_avg_populations(const EigenSystem& eig, const RpseState& state) {
  if (state.size() != eig.size()) {
    throw ConfigError("state_time_avg_populations: dimension mismatch");
  }
  require_nondegenerate(eig, "state_time_avg_populations");
  const Eigen::MatrixXd sq = eig.overlaps.cwiseProduct(eig.overlaps);
  Eigen::VectorXd probs = sq * state.populations;
  return make_site_distribution(std::move(probs), DistributionKind::time_averaged);
}

double state_fluctuation_amplitude(const EigenSystem& eig, const RpseState& state, int j) {
  const int n = eig.size();
  if (state.size() != n) {
    throw ConfigError("state_fluctuation_amplitude: dimension mismatch");
  }
  if (j < 0 || j >= n) throw ConfigError("state_fluctuation_amplitude: site out of range");
  const Eigen::ArrayXd sq = eig.overlaps.row(j).transpose().array().square();
  const double s1 = (state.populations.array() * sq).sum();
  const double s2 = (state.populations.array().square() * sq.square()).sum();
  const double amp = s1 * s1 - s2;  // sum over k != k' of P_k P_k' c_k^2 c_k'^2
  if (amp < 0.0) {
    if (amp < -1e-14) {
      throw NumericError("negative fluctuation amplitude beyond rounding residue");
    }
    return 0.0;
  }
  return amp;
}

double ensemble_fluctuation_amplitude(const EigenSystem& eig, int j) {
  const int n = eig.size();
  if (j < 0 || j >= n) throw ConfigError("ensemble_fluctuation_amplitude: site out of range");
  const double spread = eig.overlaps.row(j).array().pow(4).sum();
  return (1.0 - spread) / (static_cast<double>(n) * (n + 1.0));
}

double ensemble_variance(const EigenSystem& eig, int j) {
  const int n = eig.size();
  if (j < 0 || j >= n) throw ConfigError("ensemble_variance: site out of range");
  const double spread = eig.overlaps.row(j).array().pow(4).sum();
  return (spread - 1.0 / n) / (static_cast<double>(n) * (n + 1.0));
}

EnsembleMoments ensemble_moments(const EigenSystem& eig) {
  const int n = eig.size();
  const double nn1 = static_cast<double>(n) * (n + 1.0);
  const Eigen::VectorXd spread = site_spread(eig);
  EnsembleMoments m;
  m.mean_population = 1.0 / n;
  m.fluct_amplitude = (1.0 - spread.array()) / nn1;
  m.ensemble_variance = (spread.array() - 1.0 / n) / nn1;
  m.fluct_amplitude_site_avg = m.fluct_amplitude.mean();
  m.ensemble_variance_site_avg = m.ensemble_variance.mean();
  m.circle_budget = circle_budget(n);
  return m;
}

double circle_budget(int n) {
  return (n - 1.0) / (static_cast<double>(n) * n * (n + 1.0));
}

CircleLaw circle_law(const EigenSystem& eig) {
  const int n = eig.size();
  const double nn1 = static_cast<double>(n) * (n + 1.0);
  const double ipr = mean_ipr(eig);
  CircleLaw law;
  law.site_avg_fluct = (1.0 - ipr) / nn1;
  law.site_avg_var = (ipr - 1.0 / n) / nn1;
  law.budget = circle_budget(n);
  return law;
}

McMoments mc_verify_moments(const EigenSystem& eig, long long m_samples,
                            std::uint64_t master_seed, int threads) {
  if (m_samples < 100) throw ConfigError("mc_verify_moments requires m_samples >= 100");
  require_nondegenerate(eig, "mc_verify_moments");
  const int n = eig.size();
  const Eigen::MatrixXd sq = eig.overlaps.cwiseProduct(eig.overlaps);
  const Eigen::MatrixXd sq2 = sq.cwiseProduct(sq);

  struct BlockSums {
    Eigen::VectorXd rho1, rho2, rho3, rho4, amp1, amp2;
  };
  const long long blocks = (m_samples + kMcBlock - 1) / kMcBlock;
  std::vector<BlockSums> partial(static_cast<std::size_t>(blocks));

  detail::parallel_for_index(blocks, threads, [&](std::int64_t b) {
    RngStream rng(master_seed, streams::kRpse + static_cast<std::uint64_t>(b));
    BlockSums sums;
    sums.rho1 = Eigen::VectorXd::Zero(n);
    sums.rho2 = Eigen::VectorXd::Zero(n);
    sums.rho3 = Eigen::VectorXd::Zero(n);
    sums.rho4 = Eigen::VectorXd::Zero(n);
    sums.amp1 = Eigen::VectorXd::Zero(n);
    sums.amp2 = Eigen::VectorXd::Zero(n);
    const long long begin = b * kMcBlock;
    const long long end = std::min(m_samples, begin + kMcBlock);
    for (long long s = begin; s < end; ++s) {
      const RpseState state = sample_rpse(n, rng);
      const Eigen::VectorXd rho = sq * state.populations;
      const Eigen::VectorXd rho_sq = rho.cwiseProduct(rho);
      const Eigen::VectorXd amp =
          rho_sq - sq2 * state.populations.cwiseProduct(state.populations);
      sums.rho1 += rho;
      sums.rho2 += rho_sq;
      sums.rho3 += rho_sq.cwiseProduct(rho);
      sums.rho4 += rho_sq.cwiseProduct(rho_sq);
      sums.amp1 += amp;
      sums.amp2 += amp.cwiseProduct(amp);
    }
    partial[static_cast<std::size_t>(b)] = std::move(sums);
  });

  Eigen::VectorXd r1 = Eigen::VectorXd::Zero(n), r2 = Eigen::VectorXd::Zero(n),
                  r3 = Eigen::VectorXd::Zero(n), r4 = Eigen::VectorXd::Zero(n),
                  a1 = Eigen::VectorXd::Zero(n), a2 = Eigen::VectorXd::Zero(n);
  for (const auto& p : partial) {
    r1 += p.rho1;
    r2 += p.rho2;
    r3 += p.rho3;
    r4 += p.rho4;
    a1 += p.amp1;
    a2 += p.amp2;
  }

  const double m = static_cast<double>(m_samples);
  McMoments out;
  out.samples = m_samples;
  out.mean_population.resize(static_cast<std::size_t>(n));
  out.fluct_amplitude.resize(static_cast<std::size_t>(n));
  out.population_variance.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    {
      const double mean = r1[j] / m;
      const double var = std::max(0.0, (r2[j] - r1[j] * r1[j] / m) / (m - 1.0));
      out.mean_population[sj] = {mean, std::sqrt(var / m), m_samples};
    }
    {
      const double mean = a1[j] / m;
      const double var = std::max(0.0, (a2[j] - a1[j] * a1[j] / m) / (m - 1.0));
      out.fluct_amplitude[sj] = {mean, std::sqrt(var / m), m_samples};
    }
    {
      const double mean = r1[j] / m;
      const double var = std::max(0.0, (r2[j] - r1[j] * r1[j] / m) / (m - 1.0));
      // Fourth central moment, for the standard error of the sample variance.
      const double m4 = std::max(
          0.0, r4[j] / m - 4.0 * mean * r3[j] / m + 6.0 * mean * mean * r2[j] / m -
                   3.0 * mean * mean * mean * mean);
      const double var_of_var =
          std::max(0.0, (m4 - var * var * (m - 3.0) / (m - 1.0)) / m);
      out.population_variance[sj] = {var, std::sqrt(var_of_var), m_samples};
    }
  }
  return out;
}

}  // namespace anderson
