#pragma once

#include <stdexcept>
#include <string>

namespace qloewner {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live in different algebras, levels or amplifications.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition on the argument's location failed (outside a ball, Re(a) not
/// strictly positive, non-unitary input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inversion refused: reciprocal condition estimate below threshold.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// ODE integration failed (non-finite state, step underflow, ...).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: JSON, configuration, invalid measures.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace qloewner
