#pragma once

#include <stdexcept>
#include <string>

namespace dtd {

/// Inputs that disagree with each other (dimensions, forms, schema).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical precondition does not hold (singular system, non-ergodic chain, gamma = 1 where undefined).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// API misuse, e.g. sampling from a terminal state.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dtd
