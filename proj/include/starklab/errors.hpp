#pragma once

#include <stdexcept>
#include <string>

namespace starklab {

/// Argument outside the domain of a formula (negative coordinate, xi < 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Adaptive step size collapsed below the configured floor.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, double location)
      : std::runtime_error(what), location_(location) {}
  double location() const noexcept { return location_; }

 private:
  double location_;
};

/// (phi, phi') = (0, 0) has no Pruefer representation.
class DegenerateStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Modified Pruefer variables need V < 1.
class RepresentationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Trajectories that cannot be combined (different energy, spec or grid).
class IncompatibleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Capture grid too coarse for the requested quantity.
class ResolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Least-squares fit produced a degenerate answer.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few blocks for a slope fit.
class InsufficientRangeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration text rejected; carries the offending field and line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, int line, const std::string& message)
      : std::runtime_error(format(field, line, message)), field_(field), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& message) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += ": field '" + field + "'";
    return out + ": " + message;
  }

  std::string field_;
  int line_;
};

}  // namespace starklab
