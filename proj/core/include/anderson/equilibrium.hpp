#pragma once

#include <Eigen/Dense>

#include "anderson/dynamics.hpp"
#include "anderson/spectral.hpp"

namespace anderson {

/// Infinite-time-average site probabilities. per_origin(j0, j) is the
/// equilibrium conditional probability; displacement_avg[d] is its average
/// over all origins at cyclic displacement d in [0, N).
struct EquilibriumProfile {
  Eigen::MatrixXd per_origin;
  Eigen::VectorXd displacement_avg;

  int size() const { return static_cast<int>(displacement_avg.size()); }
};

struct LocalizationMetrics {
  double equilibrium_mssd = 0.0;
  double mean_ipr = 0.0;
  double n_effective = 0.0;
  double sqrt_mssd = 0.0;
  double sqrt2_over_ipr = 0.0;
};

struct PrMssdRelation {
  double sqrt_mssd = 0.0;       // equilibrium localization length
  double sqrt2_over_ipr = 0.0;  // sqrt(2) * participation ratio
};

/// The two readings of the entropy-based effective state count: entropy of
/// the time-averaged distribution, or time average of the instantaneous
/// entropy.
enum class EntropyMode { entropy_of_average, average_of_entropy };

/// Equilibrium conditional probability for one origin: the phase-free time
/// average sum_k <j0|E_k>^2 <j|E_k>^2, valid only for nondegenerate spectra
/// (throws DegenerateSpectrumError otherwise).
SiteDistribution time_avg_conditional(const EigenSystem& eig, int j0);

/// Full per-origin matrix plus the origin-averaged displacement profile; the
/// site average stands in for the disorder average.
EquilibriumProfile displacement_profile(const EigenSystem& eig);

/// sum_dj dj^2 {rho}(dj) over -floor(N/2) <= dj <= ceil(N/2)-1.
double equilibrium_mssd(const EquilibriumProfile& profile);

/// Eigenstate-averaged inverse participation ratio, in [1/N, 1].
double mean_ipr(const EigenSystem& eig);

/// |{rho}(dj=0) - mean IPR|: the survival-probability identity, exact
/// algebra, expected <= 1e-12 in floating point.
double survival_identity_gap(const EigenSystem& eig);

/// (sqrt MSSD, sqrt(2)/{IPR}): the two localization-length estimates. No
/// equality contract; they are reported for comparison.
PrMssdRelation pr_mssd_relation(const EigenSystem& eig);

/// Effective number of dynamically connected states from the entropy
/// measure, in [1, N]. grid is required (and used) only in
/// average_of_entropy mode.
double effective_states(const EigenSystem& eig, EntropyMode mode,
                        const TimeGrid* grid = nullptr, int threads = 1);

/// Convenience bundle for sweeps (entropy_of_average unless a grid is given).
LocalizationMetrics localization_metrics(const EigenSystem& eig,
                                         EntropyMode mode = EntropyMode::entropy_of_average,
                                         const TimeGrid* grid = nullptr, int threads = 1);

/// Signed displacement domain shared by the MSSD sums: [lo, hi] inclusive.
constexpr int displacement_lo(int n) { return -(n / 2); }
constexpr int displacement_hi(int n) { return (n + 1) / 2 - 1; }

/// (Delta j, rho_bar) rows of the displacement-averaged profile.
void export_profile_csv(const EquilibriumProfile& profile, const std::string& path);

}  // namespace anderson
