#pragma once

#include <stdexcept>
#include <string>

namespace sesn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not agree with what an operation needs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates a structural invariant (ratio, pooling, kind).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numeric argument is out of its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data is invalid (labels, audio layout, lengths).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A file could not be decoded.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace sesn
