#pragma once

#include <stdexcept>
#include <string>

namespace aadj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its domain (bad shape, violated assumption).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap or stalled.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace aadj
