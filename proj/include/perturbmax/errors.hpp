#pragma once

#include <stdexcept>
#include <string>

namespace perturbmax {

/// A precondition of an operation was violated (dimension mismatch, bad
/// parameter range, malformed input file).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An enumeration or state-space cap was exceeded.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// No exact solver accepts the (perturbed) model.
class SolverRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace perturbmax
