#ifndef LAPKIT_ERRORS_HPP
#define LAPKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lapkit {

/// Base class for all errors raised by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated (wrong representation,
/// mismatched grids, invalid parameters).
struct ContractError : Error {
  using Error::Error;
};

/// A Fourier symbol is singular (or non-finite) on the dual lattice.
struct SingularSymbolError : Error {
  using Error::Error;
};

/// An iterative method failed to converge; the message carries diagnostics.
struct ConvergenceError : Error {
  using Error::Error;
};

/// A configuration file failed validation.
struct ConfigError : Error {
  using Error::Error;
};

} // namespace lapkit

#endif
