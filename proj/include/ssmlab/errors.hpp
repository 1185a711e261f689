#pragma once

#include <stdexcept>
#include <string>

namespace ssmlab {

// Error taxonomy shared by every module. The CLI maps ConfigError/InputError/
// UsageError to exit code 2 and NumericError/IoError to exit code 1.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or hyperparameters that are inconsistent with each other.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Data that violates an operation's precondition (empty, all padding, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. a backward cache that does not belong to the parameters.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Statistic undefined for the input (constant series in a correlation).
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssmlab
