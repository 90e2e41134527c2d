#pragma once

#include <stdexcept>
#include <string>

namespace probestation {

/// Argument outside the domain of an operation (negative force, load point off the mass, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Invalid configuration or input data. Maps to exit code 2 in the CLI.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Root finding or fixed-point iteration failed to converge. Maps to exit code 3.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double last_residual, double z_act = 0.0)
      : std::runtime_error(what), last_residual_(last_residual), z_act_(z_act) {}

  [[nodiscard]] double last_residual() const noexcept { return last_residual_; }
  [[nodiscard]] double z_act() const noexcept { return z_act_; }

private:
  double last_residual_;
  double z_act_;
};

/// Load-cell saturation.
class RangeError : public std::out_of_range {
public:
  RangeError(const std::string& what, double limit) : std::out_of_range(what), limit_(limit) {}
  [[nodiscard]] double limit() const noexcept { return limit_; }

private:
  double limit_;
};

/// Trace analysis could not produce a result. Maps to exit code 4.
class AnalysisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace probestation
