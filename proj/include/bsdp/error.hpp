#pragma once

#include <stdexcept>
#include <string>

namespace bsdp {

/// Base class for all library failures. what() names the offending value,
/// index, or path so callers can report actionable errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad data values: non-finite coordinates, out-of-range fields, malformed rows.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration: overlapping regions, k < 2, non-positive thresholds.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Violated call contracts: shape mismatches, vertices outside a codec box.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Numerical failures: NaN deltas during backpropagation, diverged training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bsdp
