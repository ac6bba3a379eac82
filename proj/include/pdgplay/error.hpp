#pragma once

#include <stdexcept>
#include <string>

namespace pdgplay {

/// Base of every exception the library throws. The CLI maps the concrete
/// subclass to a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad shapes, non-finite values, schema).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Optimizer produced a non-finite potential or gradient.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdgplay
