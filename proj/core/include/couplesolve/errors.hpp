#pragma once

#include <stdexcept>
#include <string>

namespace couplesolve {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, broken invariant, bad configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce an answer (infeasible, unbounded,
/// non-unique minimizer, iteration cap).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// An agent attempted to read a value that was never delivered to it.
class LocalityViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace couplesolve
