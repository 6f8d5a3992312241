#pragma once

#include <stdexcept>
#include <string>

namespace turbcancel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration text, bad units, or a violated field constraint.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A sampling, conditioning or convergence guard refused to produce a result.
class NumericalGuardError : public Error {
 public:
  using Error::Error;
};

/// Missing inputs, unreadable files, failed writes.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace turbcancel
