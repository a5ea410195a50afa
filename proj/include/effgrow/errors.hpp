#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace effgrow {

/// Parameter outside the admissible domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// An iterative method hit its cap before meeting the tolerance.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double last_residual,
                   std::vector<double> residual_history = {})
      : std::runtime_error(what),
        last_residual_(last_residual),
        history_(std::move(residual_history)) {}

  double last_residual() const noexcept { return last_residual_; }
  const std::vector<double>& residual_history() const noexcept { return history_; }

private:
  double last_residual_;
  std::vector<double> history_;
};

/// A computed quantity violated an identity it must satisfy by construction.
class InconsistencyError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Malformed configuration file, command-line value or kernel/trait spec.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Size grid too short to hold the requested profile.
class TruncationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace effgrow
