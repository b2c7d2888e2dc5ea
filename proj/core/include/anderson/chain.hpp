#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace anderson {

/// Identity of one experiment: chain length, dimensionless disorder strength
/// sigma_eps/V, master seed, and the hopping energy unit (fixed to 1).
struct ChainSpec {
  int n = 0;
  double disorder_strength = 0.0;
  std::uint64_t seed = 0;
  double hopping = 1.0;

  /// Throws ConfigError if invalid. Periodic wraparound makes both neighbors
  /// of a site coincide at n = 2, so n >= 3 is required.
  void validate() const;
};

bool operator==(const ChainSpec& a, const ChainSpec& b);

std::string to_json_string(const ChainSpec& spec);
ChainSpec chain_spec_from_json_string(const std::string& text);

/// One concrete draw of the N Gaussian site energies (units of V).
struct DisorderRealization {
  Eigen::VectorXd energies;
  ChainSpec spec;
  int realization_index = 0;
};

/// Dense symmetric matrix of the periodic tight-binding chain: site energies
/// on the diagonal, hopping V on (j, j+-1) with cyclic corner elements.
struct Hamiltonian {
  Eigen::MatrixXd matrix;

  int size() const { return static_cast<int>(matrix.rows()); }
  double trace() const { return matrix.trace(); }
  double frobenius_norm() const { return matrix.norm(); }
};

/// N i.i.d. zero-mean Gaussian energies with sd sigma_eps, deterministic in
/// (seed, realization_index). sigma_eps = 0 yields exact zeros.
DisorderRealization sample_disorder(const ChainSpec& spec, int realization_index);

Hamiltonian build_hamiltonian(const DisorderRealization& realization);

/// Single-column CSV of the site energies, for audit.
void export_energies_csv(const DisorderRealization& realization,
                         const std::string& path);

}  // namespace anderson
