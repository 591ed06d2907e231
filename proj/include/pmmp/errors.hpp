#pragma once

#include <stdexcept>
#include <string>

namespace pmmp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input does not conform to the declared schema (unknown label, missing column, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A value is outside its admissible domain (non-positive response under log, zero variance, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent request: duplicate term, bad scenario kind, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Group key of the wrong arity or with an invalid level.
class KeyError : public Error {
 public:
  using Error::Error;
};

/// Normal equations (or the M matrix of the W decomposition) are numerically singular.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmmp
