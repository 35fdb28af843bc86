#pragma once

#include <stdexcept>
#include <string>

namespace lbstab {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function (negative load, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Derivative requested exactly at a piecewise switch point.
class AmbiguityError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class PolicyError : public Error {
 public:
  using Error::Error;
};

// Degenerate site configurations (collinear, coincident).
class GeometryError : public Error {
 public:
  using Error::Error;
};

class RetryExhaustedError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of the callee was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class IntegrationBlowup : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed JSON / CSV input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace lbstab
