#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input: malformed literals, unknown names, violated preconditions.
struct ValidationError : Error {
  using Error::Error;
};

// The instance exceeds an exact backend's configured limits (per-atom cell
// budget, coordinate horizon). Callers may fall back to Monte Carlo.
struct BackendLimitError : Error {
  using Error::Error;
};

// An exact identity that must hold by construction failed; indicates an
// implementation bug, never a property of the input.
struct InvariantViolation : Error {
  using Error::Error;
};

// CLI exit codes, shared by tools and tests.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitBackendLimit = 3,
  kExitInvariant = 4,
};

}  // namespace rlab
