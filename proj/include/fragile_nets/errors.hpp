#pragma once

#include <stdexcept>
#include <string>

namespace fragile_nets {

// Base for everything thrown by this library. Two broad families:
// input problems (bad config, bad dimensions, bad domain) and numerical
// problems detected while running (instability, non-convergence, wipeout).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InputError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};

struct ParseError : InputError {
  using InputError::InputError;
};
struct ValidationError : InputError {
  using InputError::InputError;
};
struct DomainError : InputError {
  using InputError::InputError;
};
struct DimensionMismatch : InputError {
  using InputError::InputError;
};
struct InsufficientDataError : InputError {
  using InputError::InputError;
};
struct IoError : InputError {
  using InputError::InputError;
};

struct PositiveEntryError : NumericalError {
  using NumericalError::NumericalError;
};
struct NoExitNodeError : NumericalError {
  using NumericalError::NumericalError;
};
struct CycleDetectedError : NumericalError {
  using NumericalError::NumericalError;
};
struct StabilityError : NumericalError {
  using NumericalError::NumericalError;
};
struct DegenerateMassError : NumericalError {
  using NumericalError::NumericalError;
};
struct TotalWipeoutError : NumericalError {
  using NumericalError::NumericalError;
};
struct NoConvergenceError : NumericalError {
  using NumericalError::NumericalError;
};
struct CascadeDetectedError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace fragile_nets
