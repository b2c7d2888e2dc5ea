#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "anderson/chain.hpp"

namespace anderson {

/// Eigendecomposition of the chain Hamiltonian. overlaps(j, k) = <j|E_k> with
/// sites on rows and eigenstates on columns; eigenvalues sorted ascending.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd overlaps;

  int size() const { return static_cast<int>(eigenvalues.size()); }

  /// ||H||_F reconstructed from the spectrum (orthogonal invariance).
  double frobenius_norm() const { return eigenvalues.norm(); }
};

/// Degeneracy audit: smallest adjacent level gap and (for small systems)
/// the smallest difference between distinct level gaps, which the per-state
/// fluctuation formulas implicitly assume to be nonzero.
struct SpectrumAudit {
  double min_gap = 0.0;
  std::optional<double> min_gap_difference;
  bool degenerate = false;
};

struct ResidualReport {
  double max_eigen_residual = 0.0;        // max_k ||H c_k - E_k c_k||_2
  double max_orthogonality_defect = 0.0;  // max_ij |(C^T C - I)_ij|
};

/// Levels closer than this multiple of ||H||_F are flagged degenerate: the
/// exact ring degeneracy is caught while disorder-split near-degeneracies
/// pass.
inline constexpr double kDegeneracyTol = 1e-12;

inline constexpr int kDefaultGapPairCap = 128;

/// Dense symmetric eigendecomposition (Householder tridiagonalization with
/// implicit-shift QL iteration via Eigen::SelfAdjointEigenSolver). Ascending
/// eigenvalues; each column's sign is fixed so its largest-magnitude entry is
/// positive, making repeated calls bitwise identical. Throws EigensolverError
/// if the iteration budget is exhausted.
EigenSystem diagonalize(const Eigen::MatrixXd& symmetric);
EigenSystem diagonalize(const Hamiltonian& h);

ResidualReport residual_report(const Hamiltonian& h, const EigenSystem& eig);

/// min_gap over adjacent sorted eigenvalues; gap differences enumerated only
/// for n <= pair_cap (the pair count grows as n^4).
SpectrumAudit audit_spectrum(const EigenSystem& eig, int pair_cap = kDefaultGapPairCap);

/// Throws DegenerateSpectrumError unless audit_spectrum reports nondegenerate.
void require_nondegenerate(const EigenSystem& eig, const std::string& context);

/// Eigenvalues one per line; overlaps row-major with a header row.
void export_eigenvalues_csv(const EigenSystem& eig, const std::string& path);
void export_overlaps_csv(const EigenSystem& eig, const std::string& path);

}  // namespace anderson
