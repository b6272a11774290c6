#pragma once

#include <stdexcept>
#include <string>

namespace kinfrac {

/// Raised when an input violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure fails to produce a trustworthy result
/// (singular system, non-convergent iteration, unresolved mesh).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kinfrac
