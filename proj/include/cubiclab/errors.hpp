#pragma once

#include <stdexcept>
#include <string>

namespace cubiclab {

// Every failure raised by the library derives from Error. The CLI maps the
// subclasses onto exit statuses (see tools/cubiclab.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exponent overflow or underflow of an extended-precision value.
class RangeError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// The working precision is insufficient: a small divisor below 2^{-P/2} or
// cancellation that eats the whole mantissa.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

// A point lies outside the domain where an inverse coordinate can be
// evaluated, or a contour passes through a zero.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A computed object violates a structural identity it must satisfy
// (for example the parabolic normal form of an iterate).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A configuration or input literal is malformed.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cubiclab
