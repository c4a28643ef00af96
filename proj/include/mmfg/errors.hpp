#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmfg {

/// Base class for every error raised by the solver. `kind()` is a stable
/// machine-readable tag used in CLI error documents.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

/// Invalid or incomplete configuration. Carries the offending keys.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::vector<std::string> keys = {})
      : Error("validation", what), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

/// An ensemble mean used as a divisor fell below the mean floor.
class SingularMeanError : public Error {
 public:
  explicit SingularMeanError(const std::string& what) : Error("singular_mean", what) {}
};

/// The minor player's Hamiltonian lost strong convexity (|alpha0| too small).
class SingularControlError : public Error {
 public:
  explicit SingularControlError(const std::string& what) : Error("singular_control", what) {}
};

class OptimizationFailure : public Error {
 public:
  OptimizationFailure(const std::string& what, double last_iterate, double grad_norm)
      : Error("optimization_failure", what), last_iterate_(last_iterate), grad_norm_(grad_norm) {}
  double last_iterate() const noexcept { return last_iterate_; }
  double grad_norm() const noexcept { return grad_norm_; }

 private:
  double last_iterate_;
  double grad_norm_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error("divergence", what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class BasisDegeneracyError : public Error {
 public:
  explicit BasisDegeneracyError(const std::string& what) : Error("basis_degeneracy", what) {}
};

/// Picard or fixed-point iteration ran out of iterations.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error("non_convergence", what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace mmfg
