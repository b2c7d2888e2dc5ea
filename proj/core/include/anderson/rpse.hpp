#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "anderson/dynamics.hpp"
#include "anderson/rng.hpp"
#include "anderson/spectral.hpp"

namespace anderson {

/// Random pure state parameterized by eigenstate populations P on the
/// standard simplex and phases alpha on the torus.
struct RpseState {
  Eigen::VectorXd populations;
  Eigen::VectorXd phases;

  int size() const { return static_cast<int>(populations.size()); }
  PureState to_pure_state() const;
};

/// Closed-form ensemble moments of the site populations.
struct EnsembleMoments {
  double mean_population = 0.0;                // 1/N for every site
  Eigen::VectorXd fluct_amplitude;             // time-fluctuation second moment
  double fluct_amplitude_site_avg = 0.0;
  Eigen::VectorXd ensemble_variance;           // variance of the time average
  double ensemble_variance_site_avg = 0.0;
  double circle_budget = 0.0;                  // (N-1) / (N^2 (N+1))
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

/// Per-site Monte Carlo estimates of the three moment families.
struct McMoments {
  std::vector<McEstimate> mean_population;
  std::vector<McEstimate> fluct_amplitude;
  std::vector<McEstimate> population_variance;
  long long samples = 0;
};

struct CircleLaw {
  double site_avg_fluct = 0.0;
  double site_avg_var = 0.0;
  double budget = 0.0;
};

/// Uniform state on the Bloch hypersphere: phases i.i.d. uniform on [0, 2pi);
/// populations uniform on the simplex by ordered spacings (N-1 sorted
/// uniforms on [0,1), consecutive differences of {0, u_(1..N-1), 1}).
/// Populations are drawn before phases; deterministic per stream.
RpseState sample_rpse(int n, RngStream& rng);

/// Time-averaged site populations of one state: rho_j = sum_k P_k <j|E_k>^2.
/// The time average eliminates the phases. Requires a nondegenerate spectrum.
SiteDistribution state_time_avg_populations(const EigenSystem& eig, const RpseState& state);

/// Time-averaged squared fluctuation of site j for one state, assuming
/// nondegenerate energy gaps: sum_{k != k'} P_k P_k' <j|E_k>^2 <j|E_k'>^2.
double state_fluctuation_amplitude(const EigenSystem& eig, const RpseState& state, int j);

/// Ensemble average of the fluctuation amplitude:
/// (1 - sum_k <j|E_k>^4) / (N (N+1)).
double ensemble_fluctuation_amplitude(const EigenSystem& eig, int j);

/// Ensemble variance of the time-averaged population:
/// (sum_k <j|E_k>^4 - 1/N) / (N (N+1)).
double ensemble_variance(const EigenSystem& eig, int j);

EnsembleMoments ensemble_moments(const EigenSystem& eig);

double circle_budget(int n);

/// Site-averaged complementarity: fluctuation amplitude (1 - {IPR})/(N(N+1)),
/// ensemble variance ({IPR} - 1/N)/(N(N+1)), and their N-only budget.
CircleLaw circle_law(const EigenSystem& eig);

/// Monte Carlo verification of the closed forms, deterministic per seed and
/// thread-count invariant (fixed 512-state blocks reduced in order).
McMoments mc_verify_moments(const EigenSystem& eig, long long m_samples,
                            std::uint64_t master_seed, int threads = 1);

}  // namespace anderson
