#pragma once

#include <stdexcept>
#include <string>

namespace partition_tree {

// Base of every error the library throws. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data does not conform to a schema (unknown label, duplicate column, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Malformed input text: unparsable or non-finite reals, missing fields.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Model document cannot be read back.
class ModelLoadError : public Error {
 public:
  using Error::Error;
};

// Operation is not defined for the given outcome layout or mode.
class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

// A computation would exceed a configured size cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Internal bookkeeping went wrong; indicates a bug rather than bad input.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace partition_tree
