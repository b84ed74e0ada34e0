#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gccsolver {

/// Base class for recoverable solver failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model, parameters, or configuration. The CLI maps this to exit code 2.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A stopping rule whose stop/continue status is path-dependent on a recombining lattice.
class PathDependenceError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// One-step market admits arbitrage, so the convex hedging problem has no minimizer.
class ArbitrageError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// A value process fails to dominate the payoff it should dominate.
class DominationError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration refused because the tree is too large.
class EnumerationCapError : public Error {
 public:
  EnumerationCapError(std::size_t required, std::size_t cap)
      : Error("stopping-rule enumeration needs cap >= " + std::to_string(required) +
              " non-terminal nodes (configured cap " + std::to_string(cap) + ")"),
        required_(required) {}

  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t required_;
};

/// Best-response iteration hit its safety cap. CLI exit code 3.
class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (mismatched trees, bad sizes, non-finite input).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An invariant that holds by theorem failed; indicates a bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace gccsolver
