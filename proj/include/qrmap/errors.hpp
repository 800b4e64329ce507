#pragma once

#include <stdexcept>
#include <string>

namespace qrmap {

/// Malformed or inconsistent run configuration / schema.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that violates a precondition (bad CSV cell, nonpositive value
/// under a log transform, mismatched raster geometry, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Design matrix that cannot support an estimate (rank deficiency, bad
/// intercept or dummy column).
class DesignError : public DataError {
 public:
  using DataError::DataError;
};

/// Solver or resampling procedure that could not produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qrmap
