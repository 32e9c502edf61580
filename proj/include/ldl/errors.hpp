#pragma once

#include <stdexcept>
#include <string>

namespace ldl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameter, flag, or option value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API contract (non-scalar loss, double backward, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Iterative method failed to converge or produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A metric or statistic is undefined for the given input.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input document. `path()` is a JSON-pointer-like location.
class ParseError : public Error {
 public:
  ParseError(std::string path, const std::string& what);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Semantically invalid data (overlapping masks, labels out of range).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Formats "(r x c)" for shape messages.
std::string shape_string(long rows, long cols);

}  // namespace ldl
