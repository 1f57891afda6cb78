#pragma once

#include <stdexcept>
#include <string>

namespace wcr {

// Base class for all library errors. CLI maps subtypes to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A named column is missing or the schema is self-inconsistent.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A cell failed to parse as the expected type.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Dataset invariants violated (nesting, non-finite values, empty labels).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Rank-deficient design where a unique solution is required.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Instance carries no usable signal (e.g. every sub-cluster has a
// structurally zero score denominator).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// A test cannot be run on this data (e.g. cluster-by-cluster estimation
// with a singular within-cluster design).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values (bad model parameters, bad B, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace wcr
