#pragma once

#include <stdexcept>
#include <string>

namespace locvec {

// Exit statuses surfaced by the command-line driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitInput = 2;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_status() const noexcept = 0;
};

// Bad input data or configuration.
class InputError : public Error {
 public:
  using Error::Error;
  int exit_status() const noexcept override { return kExitInput; }
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class LookupError : public InputError {
 public:
  using InputError::InputError;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class MatchingError : public InputError {
 public:
  using InputError::InputError;
};

// Numeric or convergence failure.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_status() const noexcept override { return kExitNumeric; }
};

class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

class FitError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace locvec
