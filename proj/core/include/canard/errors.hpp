#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace canard {

// Common base so callers can catch anything thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Syntax or name-resolution failure while parsing an expression.
// offset() is the byte offset into the source text.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

// Domain failure while evaluating an expression (log of a non-positive
// value, abs at its kink in gradient mode, ...).
class EvalError : public Error {
public:
  using Error::Error;
};

// Adaptive interpolation could not resolve a function: degree cap reached
// or a sample came back non-finite.
class BuildError : public Error {
public:
  using Error::Error;
};

// An IntervalFunction was evaluated, or asked to deflate, outside its
// interval of definition.
class IntervalError : public Error {
public:
  using Error::Error;
};

// The critical-manifold branch could not be continued: the y-Newton solve
// diverged or dF/dy vanished along the way.
class BranchLostError : public Error {
public:
  using Error::Error;
};

// A Newton solve (fold location, iteration parameter step) failed to
// converge or met a singular Jacobian.
class NewtonError : public Error {
public:
  using Error::Error;
};

// Time integration failed: step-size underflow, non-finite state, or the
// step budget ran out.
class OdeError : public Error {
public:
  using Error::Error;
};

// Fewer than three x-maxima in the measurement window while the state kept
// moving: no periodic recurrence to measure.
class NoRecurrenceError : public Error {
public:
  using Error::Error;
};

// The oracle bracket endpoints did not land on opposite sides of the
// amplitude jump.
class NoSignChangeError : public Error {
public:
  using Error::Error;
};

}  // namespace canard
