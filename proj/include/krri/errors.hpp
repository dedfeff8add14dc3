#pragma once

#include <stdexcept>
#include <string>

namespace krri {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

/// A symmetric solve failed even after the LDLT fallback, or its residual
/// exceeded the accepted bound.
struct NumericalSingularity : Error {
  using Error::Error;
};

/// The optimizer saw a non-finite objective value or gradient.
struct NonFiniteObjective : Error {
  using Error::Error;
};

/// The GCV trace denominator underflowed.
struct DegenerateTrace : Error {
  using Error::Error;
};

struct NoResponders : Error {
  using Error::Error;
};

struct RankDeficient : Error {
  using Error::Error;
};

/// Kernel inputs left the [0,1] domain, or a square Gram failed the
/// positive-semidefiniteness tolerance.
struct KernelDomainError : Error {
  using Error::Error;
};

struct NotPositiveSemidefinite : Error {
  using Error::Error;
};

struct MalformedCsv : Error {
  using Error::Error;
};

struct MissingInCovariates : Error {
  using Error::Error;
};

struct AllMissing : Error {
  using Error::Error;
};

/// Too many Monte Carlo replicates failed.
struct SimulationFailure : Error {
  using Error::Error;
};

}  // namespace krri
