#pragma once

#include <stdexcept>
#include <string>

namespace fockcut {

// Bad caller input (grid sizes, couplings, mismatched lengths).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested mode is known but not available for this model/grid combination.
class UnsupportedMode : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Malformed or unknown configuration input. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric routine was asked to work outside its domain. Exit code 3.
class NumericDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// z inside [m(p), M(p)] where the determinant is not defined.
class SpectralBandError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

// A quadrature node hits the singularity of the integrand.
class SingularNodeError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

// Square-root balancing weights change sign over the torus.
class ForbiddenRegionError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

class NotAnEigenvalueError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

class DegenerateMinimumError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

// Cross term between the two channels does not vanish.
class DecouplingViolatedError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

// A structural property that must hold by construction failed. Exit code 4.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fockcut
