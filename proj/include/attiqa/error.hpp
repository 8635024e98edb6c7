#pragma once

#include <stdexcept>
#include <string>

namespace attiqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data, configuration or arguments violate a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A statistic is undefined for the given input (e.g. constant sequence).
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// An embedding provider could not produce a vector.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint is missing, corrupt or incompatible.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace attiqa
