#pragma once

#include <stdexcept>
#include <string>

namespace esn {

/// Invalid parameter values (non-SPD scale matrix, violated hyperparameter bounds, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Caller passed an argument outside an operation's precondition.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or inconsistent data (CSV rows, singular design matrix, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// An algorithm failed to produce a usable result (degenerate particle system,
/// optimizer non-convergence, quadrature failure).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration file or command line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace esn
