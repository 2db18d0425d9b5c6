#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bisurv {

// Argument outside the mathematical domain of an operation (u outside [L,U],
// negative time, survival value outside (0,1], ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what, double value = 0.0)
      : std::domain_error(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

// Invalid static configuration: knots, cut points, dimensions.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parameter vector violates a model constraint (||alpha|| = 1, alpha_q > 0, ...).
class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: singular information matrix, non-finite likelihood.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; line is 1-based, 0 when not attributable to a line.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bisurv
