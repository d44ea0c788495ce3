#pragma once

#include <stdexcept>
#include <string>

namespace nehari {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input: bad shapes, non-finite entries,
/// unparseable files, values outside their documented domain.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive semidefinite is not, beyond the
/// tolerance stated by the operation that threw.
class NotPsdError : public Error {
 public:
  using Error::Error;
};

/// A strong-positivity precondition of the requested operation fails.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The resolvent term lost strong positivity mid-iteration. Carries the
/// offending smallest eigenvalue for diagnostics.
class IterationBreakdownError : public Error {
 public:
  IterationBreakdownError(const std::string& what, double offending_min_eig)
      : Error(what), offending_min_eig_(offending_min_eig) {}

  double offending_min_eigenvalue() const noexcept { return offending_min_eig_; }

 private:
  double offending_min_eig_;
};

/// An accessor or follow-up operation was called on a result that is not
/// in the state it requires (e.g. certifying a run that never converged).
class StateError : public Error {
 public:
  using Error::Error;
};

/// The operation is well-formed but does not apply to this input
/// (e.g. the scalar oracle on genuinely matrix-valued data).
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

}  // namespace nehari
