#pragma once

#include <stdexcept>
#include <string>

namespace precopt {

// Error taxonomy shared by every module. The CLI maps these onto exit codes:
// input/configuration problems -> 2, numerical failures mid-run -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatches, out-of-range parameters, bad config.
struct InvalidInput : Error {
  using Error::Error;
};

// A matrix required to be positive semidefinite has an eigenvalue below the
// tolerated negative band.
struct NotPsd : Error {
  using Error::Error;
};

// A matrix required to be strictly positive definite is singular or indefinite.
struct NotPositiveDefinite : Error {
  using Error::Error;
};

// The preconditioner root collapsed to (numerical) zero, so no inverse step exists.
struct SingularPreconditioner : Error {
  using Error::Error;
};

// A direction was requested for an exactly zero vector.
struct ZeroVector : Error {
  using Error::Error;
};

// The requested operation has no implementation for this combination of inputs
// (by design, never silently approximated).
struct Unsupported : Error {
  using Error::Error;
};

// A piecewise construction cannot satisfy its feasibility budget.
struct ConstructionInfeasible : Error {
  using Error::Error;
};

// Non-finite values or other floating-point breakdown detected mid-computation.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace precopt
