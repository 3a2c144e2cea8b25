#ifndef MNLINK_ERRORS_HPP
#define MNLINK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mnlink {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// The requested probability vector cannot be reached by the inverse link for
// the current link parameters (the power-branch inverse is undefined).
class InverseDomainError : public Error {
 public:
  using Error::Error;
};

// A linear predictor left the domain of the link function.
class LinkDomainError : public Error {
 public:
  using Error::Error;
};

// The Fisher information failed a Cholesky factorization beyond jitter.
class SingularInformation : public Error {
 public:
  using Error::Error;
};

// No grid point of a profile search produced a converged fit.
class AllGridFailed : public Error {
 public:
  using Error::Error;
};

// A percentile set was required to be a single point but is not.
class NotSingleton : public Error {
 public:
  using Error::Error;
};

// Percentile system has more unknowns than equations.
class Underdetermined : public Error {
 public:
  using Error::Error;
};

// Percentile system is overdetermined and inconsistent.
class NoSolution : public Error {
 public:
  using Error::Error;
};

// Malformed input file (CSV or config); message carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input with invalid content (counts, dimensions, keys).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mnlink

#endif
