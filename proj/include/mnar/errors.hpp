#pragma once

#include <stdexcept>
#include <string>

namespace mnar {

/// Base for all library errors. CLI maps SchemaError/ConfigError to exit
/// code 1 (user error) and the numerical ones to exit code 2.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct IntegrationError : Error {
  IntegrationError(const std::string& msg, double where)
      : Error(msg + " (at y=" + std::to_string(where) + ")"), node(where) {}
  double node;
};

struct NonConvergenceError : Error {
  NonConvergenceError(const std::string& msg, double resid)
      : Error(msg + " (residual " + std::to_string(resid) + ")"),
        residual(resid) {}
  double residual;
};

struct FitError : Error {
  using Error::Error;
};

}  // namespace mnar
