#pragma once

#include <stdexcept>
#include <string>

namespace aec {

// Root of every error thrown by the library. The CLI maps ConfigError and
// ArgumentError to exit code 1 and IoError/FormatError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration value violates a documented invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A call-site argument is out of its domain (negative delay, empty signal...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A file exists but its contents are malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload length does not match what the header promises.
class SizeMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

}  // namespace aec
