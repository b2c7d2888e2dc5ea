#pragma once

#include <stdexcept>
#include <string>

namespace anderson {

/// Invalid configuration or parameter values (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: solver non-convergence, broken invariants (exit code 3).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// The closed-form infinite-time averages require a nondegenerate spectrum.
struct DegenerateSpectrumError : NumericError {
  explicit DegenerateSpectrumError(const std::string& what) : NumericError(what) {}
};

/// Eigensolver failed to converge within its iteration budget.
struct EigensolverError : NumericError {
  explicit EigensolverError(const std::string& what) : NumericError(what) {}
};

/// Filesystem failure while emitting datasets (exit code 4).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace anderson
