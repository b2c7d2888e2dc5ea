#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>

#include "anderson/spectral.hpp"

namespace anderson {

/// Wave-function in the energy eigenbasis, stored in polar form: a_k =
/// magnitudes[k] * exp(i * phases[k]). Propagation only shifts phases, so the
/// eigenbasis moduli (and the norm) are conserved exactly, not just to
/// rounding.
struct PureState {
  Eigen::VectorXd magnitudes;
  Eigen::VectorXd phases;

  int size() const { return static_cast<int>(magnitudes.size()); }
  double norm_sq() const { return magnitudes.squaredNorm(); }
  Eigen::VectorXcd coefficients() const;
};

enum class DistributionKind { instantaneous, time_averaged, site_averaged };

/// Probability over the N sites, normalized to 1 within 1e-10. Entries in
/// [-1e-14, 0) are rounding residue and get clamped to 0; anything more
/// negative signals a broken eigensystem and throws.
struct SiteDistribution {
  Eigen::VectorXd probs;
  DistributionKind kind = DistributionKind::instantaneous;
  std::optional<int> origin;

  int size() const { return static_cast<int>(probs.size()); }
};

SiteDistribution make_site_distribution(Eigen::VectorXd probs, DistributionKind kind,
                                        std::optional<int> origin = std::nullopt);

/// Sampling plan for numerical time averages: `samples` points on
/// [t_burn, t_max], uniformly spaced with per-sample uniform jitter (seeded)
/// to suppress aliasing against near-commensurate level spacings.
struct TimeGrid {
  double t_burn = 0.0;
  double t_max = 0.0;
  int samples = 1;
  std::uint64_t jitter_seed = 0;

  void validate() const;
};

/// |psi(0)> = |j0>, expanded in the eigenbasis: a_k = <E_k|j0>. j0 is 0-based.
PureState localized_state(const EigenSystem& eig, int j0);

/// a_k(t) = a_k(0) exp(-i E_k t), scaled time units hbar/V = 1.
PureState evolve(const EigenSystem& eig, const PureState& psi, double t);

/// rho_j = |sum_k <j|E_k> a_k|^2.
SiteDistribution site_populations(const EigenSystem& eig, const PureState& psi);

/// Probability of finding the excitation at each site at scaled time t, given
/// initial localization at j0. Composition of localized_state, evolve and
/// site_populations.
SiteDistribution conditional_probability(const EigenSystem& eig, int j0, double t);

/// Mean squared site displacement about j0 over the cyclic displacement
/// domain -floor(N/2) <= dj <= ceil(N/2)-1.
double instantaneous_mssd(const SiteDistribution& dist, int j0);

/// Numerical long-time average of the site populations over the jittered
/// grid. This is the sampling oracle against which the closed-form
/// infinite-time average is validated. Deterministic for any thread count:
/// samples are accumulated in fixed 256-sample blocks reduced in block order.
SiteDistribution trajectory_time_average(const EigenSystem& eig, const PureState& psi0,
                                         const TimeGrid& grid, int threads = 1);

/// The jittered sample times themselves (fixed by grid.jitter_seed).
std::vector<double> sample_times(const TimeGrid& grid);

}  // namespace anderson
