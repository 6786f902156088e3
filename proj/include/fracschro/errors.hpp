#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracschro {

/// Invalid configuration or argument (CLI exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation outside the domain of a closed-form rule (singular power, gamma pole).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Not enough stored time levels for a temporal derivative or cascade.
class HistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every grid point is a node of the wavefunction (CLI exit code 3).
class NodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical blow-up or violated stability bound (CLI exit code 2).
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(std::size_t step, const std::string& what)
      : std::runtime_error("instability at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace fracschro
