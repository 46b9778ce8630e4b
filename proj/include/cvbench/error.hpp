#pragma once

#include <stdexcept>
#include <string>

namespace cvbench {

/// Raised when an argument lies outside the documented domain of an operation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Raised by `certify` when the candidate violates the primal constraints.
class InfeasibleCandidate : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Raised when a request exceeds a configured size cap (kernel dimension, oracle size).
class ResourceLimit : public std::length_error {
 public:
  using std::length_error::length_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace cvbench
