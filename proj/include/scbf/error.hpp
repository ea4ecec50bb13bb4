#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace scbf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad configuration, inconsistent sizes, violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold for the given arguments.
class PreconditionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numerical failure: blow-up of a trajectory or a solver that did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public NumericalError {
 public:
  BlowUpError(std::size_t step, const std::string& where)
      : NumericalError("non-finite state in " + where + " at step " + std::to_string(step)),
        step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, double residual)
      : NumericalError(format(what, residual)),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  static std::string format(const std::string& what, double residual) {
    std::ostringstream s;
    s << what << " did not converge (final gradient norm " << residual << ")";
    return s.str();
  }

  double residual_;
};

}  // namespace scbf
