#pragma once

#include <stdexcept>
#include <string>

namespace coarsel2 {

// Root of every library error; the runner maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed group tables, invalid specs, invariance violations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Element not representable in a group, or outside an enumerable range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// A tuple space or window would exceed the configured size cap.
class CapError : public Error {
 public:
  CapError(const std::string& what, double estimate)
      : Error(what), estimate_(estimate) {}
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

// Operators combined across incompatible windows, degrees or scales.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// A semi-norm or restriction requested beyond the scale a space carries.
class ScaleError : public Error {
 public:
  using Error::Error;
};

// An integral operator needs tuples the domain space does not index even
// though every element involved lies in the window.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, int required_scale)
      : Error(what), required_scale_(required_scale) {}
  int required_scale() const { return required_scale_; }

 private:
  int required_scale_;
};

// A coarse map composition left the tabulated window.
class MarginError : public Error {
 public:
  using Error::Error;
};

// No interior tuples remain after margin shrinkage.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Operation requires whole-group data or a finite group.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Smoothing kernel normalization mu(B(c)) < 1.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

// Eigensolver failed to converge.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// An inequality that should always hold did not: a bug.
class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace coarsel2
