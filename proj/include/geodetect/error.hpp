#pragma once

#include <stdexcept>
#include <string>

namespace geodetect {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Empty, all-zero, negative or non-finite spectrum.
class InvalidSpectrum : public Error {
 public:
  using Error::Error;
};

/// Argument outside the documented domain of an operation.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Mismatched sizes between inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Wrong kind of object handed to an operation (e.g. a GOE sample to the
/// geometric map), or a malformed command line.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: a quadrature that did not reach its tolerance, a
/// bracket that could not be established, a non-SPD matrix.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double partial_value = 0.0,
               double achieved_error = 0.0)
      : Error(what), partial_value_(partial_value),
        achieved_error_(achieved_error) {}

  double partial_value() const noexcept { return partial_value_; }
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double partial_value_;
  double achieved_error_;
};

/// Input that violates the validity region of a bound (the analytic entropy
/// envelope, the log-det Monte Carlo on a rank-deficient spectrum).
class DomainError : public NumericError {
 public:
  explicit DomainError(const std::string& what) : NumericError(what) {}
};

}  // namespace geodetect
