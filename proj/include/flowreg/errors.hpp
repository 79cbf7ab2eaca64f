#pragma once

#include <stdexcept>
#include <string>

namespace flowreg {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Time step violates the CFL stability bound of an explicit transport solve.
struct CflViolation : Error {
  using Error::Error;
};

/// Argument outside its admissible range (e.g. basis evaluation time).
struct OutOfRange : Error {
  using Error::Error;
};

/// Sequence lengths inconsistent with the time grid or basis.
struct LengthMismatch : Error {
  using Error::Error;
};

/// Inner solve requested for a vanishing right-hand side.
struct ZeroGradient : Error {
  using Error::Error;
};

/// Dense assembly requested for a system too large to afford.
struct TooLarge : Error {
  using Error::Error;
};

/// File could not be read or written.
struct IoError : Error {
  using Error::Error;
};

/// File content does not match the expected format.
struct FormatError : Error {
  using Error::Error;
};

/// Relative measures are undefined because the two images coincide.
struct IdenticalImages : Error {
  using Error::Error;
};

/// The regularity bound is already breached at the initial (largest) beta.
struct BoundViolatedAtStart : Error {
  using Error::Error;
};

}  // namespace flowreg
