#pragma once

#include <stdexcept>
#include <string>

namespace sphtest {

/// Error categories. The numeric values double as CLI exit codes and as the
/// status codes of the C interface.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  numerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Argument outside the mathematical domain of an operation (negative degree,
/// parity mismatch, kappa too large for a density, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Malformed or inconsistent input data (non-unit rows, bad CSV, bad config).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// A numerical procedure failed or two routes that must agree did not.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

}  // namespace sphtest
