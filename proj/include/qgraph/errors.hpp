#pragma once

#include <stdexcept>
#include <string>

namespace qg {

// Bad input: malformed graph, invalid (P, L), violated precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to deliver (non-convergence, residual too large).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qg
