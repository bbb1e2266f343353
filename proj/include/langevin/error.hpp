#pragma once

#include <stdexcept>
#include <string>

namespace langevin {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments violate a documented precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be symmetric positive definite is not.
class NotSpd : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Operation only supports low dimensions (grid or subset enumeration).
class UnsupportedDimension : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A chain sits at a point of zero target density.
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Chains carry no variance, so a diagnostic is undefined.
class DegenerateChains : public Error {
 public:
  using Error::Error;
};

/// A Monte Carlo estimate has too few effective samples to trust.
class UnreliableEstimate : public Error {
 public:
  using Error::Error;
};

/// Iterative numerical routine did not finish.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace langevin
