#include "anderson/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "anderson/csv.hpp"
#include "anderson/errors.hpp"
#include "anderson/rng.hpp"
#include "parallel.hpp"

namespace anderson {

namespace {
// Samples are accumulated per fixed-size block and the blocks reduced in
// index order, so the sum does not depend on how threads were scheduled.
constexpr int kTimeBlock = 256;
}  // namespace

Eigen::VectorXcd PureState::coefficients() const {
  Eigen::VectorXcd out(magnitudes.size());
  out.real() = magnitudes.array() * phases.array().cos();
  out.imag() = magnitudes.array() * phases.array().sin();
  return out;
}

SiteDistribution make_site_distribution(Eigen::VectorXd probs, DistributionKind kind,
                                        std::optional<int> origin) {
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    if (probs[j] < 0.0) {
      if (probs[j] < -1e-14) {
        throw NumericError("site probability " + format_double(probs[j]) +
                           " at site " + std::to_string(j) +
                           " is negative beyond rounding residue");
      }
      probs[j] = 0.0;
    }
  }
  const double total = probs.sum();
  if (std::abs(total - 1.0) > 1e-10) {
    throw NumericError("site distribution sums to " + format_double(total) +
                       ", expected 1 within 1e-10");
  }
  return SiteDistribution{std::move(probs), kind, origin};
}

void TimeGrid::validate() const {
  if (!(t_burn >= 0.0) || !(t_max >= t_burn)) {
    throw ConfigError("time grid requires 0 <= t_burn <= t_max");
  }
  if (samples < 1) throw ConfigError("time grid requires samples >= 1");
}

PureState localized_state(const EigenSystem& eig, int j0) {
  const int n = eig.size();
  if (j0 < 0 || j0 >= n) {
    throw ConfigError("initial site " + std::to_string(j0) + " out of range [0, " +
                      std::to_string(n) + ")");
  }
  PureState psi;
  psi.magnitudes = eig.overlaps.row(j0).cwiseAbs().transpose();
  psi.phases = (eig.overlaps.row(j0).transpose().array() < 0.0)
                   .select(Eigen::VectorXd::Constant(n, std::numbers::pi),
                           Eigen::VectorXd::Zero(n));
  return psi;
}

PureState evolve(const EigenSystem& eig, const PureState& psi, double t) {
  if (psi.size() != eig.size()) throw ConfigError("evolve: dimension mismatch");
  if (!std::isfinite(t)) throw ConfigError("evolve: time must be finite");
  PureState out = psi;
  out.phases -= t * eig.eigenvalues;
  return out;
}

SiteDistribution site_populations(const EigenSystem& eig, const PureState& psi) {
  if (psi.size() != eig.size()) {
    throw ConfigError("site_populations: dimension mismatch");
  }
  const Eigen::VectorXd re = psi.magnitudes.array() * psi.phases.array().cos();
  const Eigen::VectorXd im = psi.magnitudes.array() * psi.phases.array().sin();
  const Eigen::VectorXd site_re = eig.overlaps * re;
  const Eigen::VectorXd site_im = eig.overlaps * im;
  Eigen::VectorXd probs = site_re.array().square() + site_im.array().square();
  return make_site_distribution(std::move(probs), DistributionKind::instantaneous);
}

SiteDistribution conditional_probability(const EigenSystem& eig, int j0, double t) {
  SiteDistribution dist = site_populations(eig, evolve(eig, localized_state(eig, j0), t));
  dist.origin = j0;
  return dist;
}

double instantaneous_mssd(const SiteDistribution& dist, int j0) {
  const int n = dist.size();
  if (j0 < 0 || j0 >= n) throw ConfigError("instantaneous_mssd: origin out of range");
  const int lo = -(n / 2);
  const int hi = (n + 1) / 2 - 1;
  double sum = 0.0;
  for (int dj = lo; dj <= hi; ++dj) {
    const int j = ((j0 + dj) % n + n) % n;
    sum += static_cast<double>(dj) * static_cast<double>(dj) * dist.probs[j];
  }
  return sum;
}

std::vector<double> sample_times(const TimeGrid& grid) {
  grid.validate();
  const int m = grid.samples;
  const double dt = (grid.t_max - grid.t_burn) / static_cast<double>(m);
  std::vector<double> times(static_cast<std::size_t>(m));
  const int blocks = (m + kTimeBlock - 1) / kTimeBlock;
  for (int b = 0; b < blocks; ++b) {
    RngStream rng(grid.jitter_seed, streams::kJitter + static_cast<std::uint64_t>(b));
    const int begin = b * kTimeBlock;
    const int end = std::min(m, begin + kTimeBlock);
    for (int i = begin; i < end; ++i) {
      times[static_cast<std::size_t>(i)] =
          grid.t_burn + (static_cast<double>(i) + rng.uniform01()) * dt;
    }
  }
  return times;
}

SiteDistribution trajectory_time_average(const EigenSystem& eig, const PureState& psi0,
                                         const TimeGrid& grid, int threads) {
  grid.validate();
  if (psi0.size() != eig.size()) {
    throw ConfigError("trajectory_time_average: dimension mismatch");
  }
  const std::vector<double> times = sample_times(grid);
  const int m = grid.samples;
  const int n = eig.size();
  const int blocks = (m + kTimeBlock - 1) / kTimeBlock;

  std::vector<Eigen::VectorXd> partial(static_cast<std::size_t>(blocks));
  detail::parallel_for_index(blocks, threads, [&](std::int64_t b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    const int begin = static_cast<int>(b) * kTimeBlock;
    const int end = std::min(m, begin + kTimeBlock);
    for (int i = begin; i < end; ++i) {
      acc += site_populations(eig, evolve(eig, psi0, times[static_cast<std::size_t>(i)]))
                 .probs;
    }
    partial[static_cast<std::size_t>(b)] = std::move(acc);
  });

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const auto& acc : partial) mean += acc;
  mean /= static_cast<double>(m);
  return make_site_distribution(std::move(mean), DistributionKind::time_averaged);
}

}  // namespace anderson
