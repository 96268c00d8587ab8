#pragma once

#include <stdexcept>
#include <string>

namespace wasgd {

// Root of every error the library throws.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Bad input: malformed config, unknown scheme, violated precondition.
// The CLI maps these to exit code 2.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// Numerical breakdown at runtime. The CLI maps these to exit code 3.
class NumericalError : public Error {
  public:
    using Error::Error;
};

class NotSpd : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

// An SGD iterate left the finite range (usually a step size too large
// for the curvature of the loss).
class NonFinite : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class OutOfOrder : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class InsufficientBuffer : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class Unsupported : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class NotAvailable : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class ZeroRegressor : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class ZeroInitError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

class LevelNotTabulated : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

}  // namespace wasgd
