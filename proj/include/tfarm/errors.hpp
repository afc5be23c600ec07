#pragma once

#include <stdexcept>
#include <string>

namespace tfarm {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on shapes, indices or parameter ranges was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The inputs were well formed but the computation could not be carried out:
/// non-convergence, loss of positive definiteness, degenerate columns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tfarm
