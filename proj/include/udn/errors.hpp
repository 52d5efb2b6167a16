#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace udn {

/// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-point loop exhausted its iteration budget (CLI exit code 3).
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Discretization produced an invalid state (negative density, lost mass, NaN).
class SchemeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was invoked without the state it needs (e.g. no policy loaded).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A runtime invariant check failed (CLI exit code 4).
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace udn
