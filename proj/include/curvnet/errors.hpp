#pragma once

#include <stdexcept>
#include <string>

namespace curvnet {

/// Rejected inputs: bad arguments, malformed files, broken preconditions.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical failures: degenerate gradients, non-convergence, NaN loss.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace curvnet
