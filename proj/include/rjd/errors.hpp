#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace rjd {

/// A precondition on user-supplied input failed.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The discretized eigenproblem could not be solved to a positive eigenpair.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what,
                       double eigenvalue = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what), eigenvalue_(eigenvalue) {}

  /// Offending eigenvalue, NaN when not applicable.
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

/// A closed-form relation was evaluated at (or searched across) a pole.
class PoleError : public std::domain_error {
 public:
  PoleError(const std::string& what, double location)
      : std::domain_error(what), location_(location) {}

  double location() const noexcept { return location_; }

 private:
  double location_;
};

/// Path simulation aborted (non-finite coefficients, invalid intensity bound).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A result failed a structural check (e.g. convexity of a psi curve).
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rjd
