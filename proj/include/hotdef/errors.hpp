#pragma once

#include <stdexcept>
#include <string>

namespace hotdef {

/// Shapes or orders of operands disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the real branch of a spectral kernel, or a solver point
/// below the detectable threshold.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Observed eigenvalues too small for parameter estimation to be defined.
class InfeasibleObservationError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Invalid model parameters (non-PSD Gram matrix, non-positive weights, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// The Newton system became singular and no least-squares step made progress.
/// Usually means the initial point sits on a degenerate branch; re-initialize.
class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hotdef
