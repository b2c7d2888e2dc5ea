#include "anderson/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "anderson/csv.hpp"
#include "anderson/errors.hpp"

namespace anderson {

EigenSystem diagonalize(const Eigen::MatrixXd& symmetric) {
  const auto n = symmetric.rows();
  if (n != symmetric.cols() || n < 1) {
    throw ConfigError("diagonalize requires a square matrix");
  }
  const double asym = (symmetric - symmetric.transpose()).cwiseAbs().maxCoeff();
  if (asym != 0.0) {
    throw ConfigError("diagonalize requires an exactly symmetric matrix");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw EigensolverError("symmetric eigensolver did not converge (n = " +
                           std::to_string(n) + ")");
  }

  EigenSystem eig;
  eig.eigenvalues = solver.eigenvalues();
  eig.overlaps = solver.eigenvectors();

  // Sign convention: largest-magnitude entry of each eigenvector positive
  // (first such entry on ties), so the decomposition is deterministic.
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index j_max = 0;
    eig.overlaps.col(k).cwiseAbs().maxCoeff(&j_max);
    if (eig.overlaps(j_max, k) < 0.0) {
      eig.overlaps.col(k) = -eig.overlaps.col(k);
    }
  }
  return eig;
}

EigenSystem diagonalize(const Hamiltonian& h) { return diagonalize(h.matrix); }

ResidualReport residual_report(const Hamiltonian& h, const EigenSystem& eig) {
  const auto n = h.matrix.rows();
  if (eig.overlaps.rows() != n || eig.eigenvalues.size() != n) {
    throw ConfigError("residual_report: dimension mismatch");
  }
  ResidualReport report;
  const Eigen::MatrixXd hc = h.matrix * eig.overlaps;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double res = (hc.col(k) - eig.eigenvalues[k] * eig.overlaps.col(k)).norm();
    report.max_eigen_residual = std::max(report.max_eigen_residual, res);
  }
  const Eigen::MatrixXd gram = eig.overlaps.transpose() * eig.overlaps;
  report.max_orthogonality_defect =
      (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  return report;
}

SpectrumAudit audit_spectrum(const EigenSystem& eig, int pair_cap) {
  const int n = eig.size();
  SpectrumAudit audit;
  if (n < 2) {
    audit.min_gap = 0.0;
    audit.degenerate = false;
    return audit;
  }
  audit.min_gap = (eig.eigenvalues.tail(n - 1) - eig.eigenvalues.head(n - 1)).minCoeff();
  audit.degenerate = audit.min_gap < kDegeneracyTol * eig.frobenius_norm();

  if (n <= pair_cap) {
    // All C(n,2) level gaps, sorted; the smallest difference between two
    // distinct gaps is the smallest adjacent difference of the sorted list.
    std::vector<double> gaps;
    gaps.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int k = 0; k < n; ++k) {
      for (int kp = k + 1; kp < n; ++kp) {
        gaps.push_back(eig.eigenvalues[kp] - eig.eigenvalues[k]);
      }
    }
    std::sort(gaps.begin(), gaps.end());
    double min_diff = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < gaps.size(); ++i) {
      min_diff = std::min(min_diff, gaps[i] - gaps[i - 1]);
    }
    audit.min_gap_difference = gaps.size() > 1 ? min_diff : 0.0;
  }
  return audit;
}

void require_nondegenerate(const EigenSystem& eig, const std::string& context) {
  const int n = eig.size();
  if (n < 2) return;
  const double min_gap =
      (eig.eigenvalues.tail(n - 1) - eig.eigenvalues.head(n - 1)).minCoeff();
  if (min_gap < kDegeneracyTol * eig.frobenius_norm()) {
    throw DegenerateSpectrumError(
        context + ": spectrum is degenerate (min gap " + format_double(min_gap) +
        "); the infinite-time average is ill-defined. Increase the disorder "
        "strength or change the seed.");
  }
}

void export_eigenvalues_csv(const EigenSystem& eig, const std::string& path) {
  CsvWriter csv(path, {"energy"});
  csv.begin_data();
  for (int k = 0; k < eig.size(); ++k) {
    csv.row({eig.eigenvalues[k]});
  }
}

void export_overlaps_csv(const EigenSystem& eig, const std::string& path) {
  const int n = eig.size();
  std::vector<std::string> columns;
  columns.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    columns.push_back("k" + std::to_string(k + 1));
  }
  CsvWriter csv(path, columns);
  csv.meta("layout", "row j holds <j|E_k> for k = 1..n");
  csv.begin_data();
  std::vector<CsvCell> cells(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      cells[static_cast<std::size_t>(k)] = eig.overlaps(j, k);
    }
    csv.row(cells);
  }
}

}  // namespace anderson
