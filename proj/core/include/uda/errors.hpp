#pragma once

#include <stdexcept>
#include <string>

namespace uda {

// Root of every error thrown by the library. Subclasses mirror the failure
// categories the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or matrix extents.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value outside the mathematical domain of an operation (log of a
// non-positive number, probabilities that do not sum to one, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An invalid configuration scalar (negative temperature, empty sample, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced or consumed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace uda
