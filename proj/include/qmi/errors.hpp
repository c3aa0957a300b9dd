#pragma once

#include <stdexcept>
#include <string>

namespace qmi {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (dimension mismatch, non-Hermitian,
/// not positive definite, parameter out of range).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A scalar function was evaluated outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative or quadrature procedure produced a non-finite or
/// non-converged value.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A mathematically impossible state was reached; indicates a bug upstream.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// A certified identity did not hold within its tolerance.
class VerificationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace qmi
