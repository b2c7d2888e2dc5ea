#include "anderson/equilibrium.hpp"

#include <cmath>
#include <vector>

#include "anderson/csv.hpp"
#include "anderson/errors.hpp"
#include "parallel.hpp"

namespace anderson {

namespace {

// 0 ln 0 = 0; entries below this are treated as exact zeros before the log.
constexpr double kEntropyFloor = 1e-300;

double shannon_entropy(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    const double p = probs[j];
    if (p > kEntropyFloor) h -= p * std::log(p);
  }
  return h;
}

}  // namespace

SiteDistribution time_avg_conditional(const EigenSystem& eig, int j0) {
  const int n = eig.size();
  if (j0 < 0 || j0 >= n) throw ConfigError("time_avg_conditional: origin out of range");
  require_nondegenerate(eig, "time_avg_conditional");
  const Eigen::MatrixXd sq = eig.overlaps.cwiseProduct(eig.overlaps);
  Eigen::VectorXd probs = sq * sq.row(j0).transpose();
  SiteDistribution dist =
      make_site_distribution(std::move(probs), DistributionKind::time_averaged, j0);
  return dist;
}

EquilibriumProfile displacement_profile(const EigenSystem& eig) {
  require_nondegenerate(eig, "displacement_profile");
  const int n = eig.size();
  const Eigen::MatrixXd sq = eig.overlaps.cwiseProduct(eig.overlaps);
  EquilibriumProfile profile;
  profile.per_origin.noalias() = sq * sq.transpose();
  profile.displacement_avg = Eigen::VectorXd::Zero(n);
  for (int j0 = 0; j0 < n; ++j0) {
    for (int d = 0; d < n; ++d) {
      profile.displacement_avg[d] += profile.per_origin(j0, (j0 + d) % n);
    }
  }
  profile.displacement_avg /= static_cast<double>(n);
  return profile;
}

double equilibrium_mssd(const EquilibriumProfile& profile) {
  const int n = profile.size();
  double sum = 0.0;
  for (int dj = displacement_lo(n); dj <= displacement_hi(n); ++dj) {
    const int d = (dj % n + n) % n;
    sum += static_cast<double>(dj) * static_cast<double>(dj) *
           profile.displacement_avg[d];
  }
  return sum;
}

double mean_ipr(const EigenSystem& eig) {
  const Eigen::ArrayXXd sq = eig.overlaps.array().square();
  return (sq * sq).sum() / static_cast<double>(eig.size());
}

double survival_identity_gap(const EigenSystem& eig) {
  require_nondegenerate(eig, "survival_identity_gap");
  const int n = eig.size();
  const Eigen::MatrixXd sq = eig.overlaps.cwiseProduct(eig.overlaps);
  // {rho}(dj = 0) accumulated directly, without forming the full profile.
  double survival = 0.0;
  for (int j0 = 0; j0 < n; ++j0) {
    survival += sq.row(j0).squaredNorm();
  }
  survival /= static_cast<double>(n);
  return std::abs(survival - mean_ipr(eig));
}

PrMssdRelation pr_mssd_relation(const EigenSystem& eig) {
  PrMssdRelation rel;
  rel.sqrt_mssd = std::sqrt(equilibrium_mssd(displacement_profile(eig)));
  rel.sqrt2_over_ipr = std::sqrt(2.0) / mean_ipr(eig);
  return rel;
}

double effective_states(const EigenSystem& eig, EntropyMode mode, const TimeGrid* grid,
                        int threads) {
  const int n = eig.size();
  if (mode == EntropyMode::entropy_of_average) {
    const EquilibriumProfile profile = displacement_profile(eig);
    double h = 0.0;
    for (int j0 = 0; j0 < n; ++j0) {
      h += shannon_entropy(profile.per_origin.row(j0).transpose());
    }
    return std::exp(h / static_cast<double>(n));
  }

  if (grid == nullptr) {
    throw ConfigError("effective_states: average_of_entropy requires a time grid");
  }
  grid->validate();
  const std::vector<double> times = sample_times(*grid);
  // Entropy of every origin at each sampled time; the amplitude matrix
  // C diag(e^{-iEt}) C^T is formed once per sample.
  std::vector<double> per_sample(times.size(), 0.0);
  detail::parallel_for_index(static_cast<std::int64_t>(times.size()), threads,
                             [&](std::int64_t i) {
    const double t = times[static_cast<std::size_t>(i)];
    const Eigen::ArrayXd theta = -t * eig.eigenvalues.array();
    const Eigen::MatrixXd re =
        eig.overlaps * theta.cos().matrix().asDiagonal() * eig.overlaps.transpose();
    const Eigen::MatrixXd im =
        eig.overlaps * theta.sin().matrix().asDiagonal() * eig.overlaps.transpose();
    const Eigen::MatrixXd rho = re.cwiseProduct(re) + im.cwiseProduct(im);
    double h = 0.0;
    for (int j0 = 0; j0 < n; ++j0) {
      h += shannon_entropy(rho.col(j0));
    }
    per_sample[static_cast<std::size_t>(i)] = h / static_cast<double>(n);
  });
  double mean_entropy = 0.0;
  for (double h : per_sample) mean_entropy += h;
  mean_entropy /= static_cast<double>(times.size());
  return std::exp(mean_entropy);
}

LocalizationMetrics localization_metrics(const EigenSystem& eig, EntropyMode mode,
                                         const TimeGrid* grid, int threads) {
  LocalizationMetrics m;
  m.equilibrium_mssd = equilibrium_mssd(displacement_profile(eig));
  m.mean_ipr = mean_ipr(eig);
  m.n_effective = effective_states(eig, mode, grid, threads);
  m.sqrt_mssd = std::sqrt(m.equilibrium_mssd);
  m.sqrt2_over_ipr = std::sqrt(2.0) / m.mean_ipr;
  return m;
}

void export_profile_csv(const EquilibriumProfile& profile, const std::string& path) {
  const int n = profile.size();
  CsvWriter csv(path, {"dj", "rho_bar"});
  csv.meta("units", "dj in sites; rho_bar dimensionless");
  csv.begin_data();
  for (int dj = displacement_lo(n); dj <= displacement_hi(n); ++dj) {
    const int d = (dj % n + n) % n;
    csv.row({static_cast<long long>(dj), profile.displacement_avg[d]});
  }
}

}  // namespace anderson
