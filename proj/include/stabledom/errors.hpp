#pragma once

#include <stdexcept>
#include <string>

namespace stabledom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// evaluate() called with x == y; the intensity may be infinite there.
class CoincidentPointsError : public Error {
 public:
  using Error::Error;
};

/// A quadrature could not reach its requested accuracy.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Lattice spacing does not resolve the truncation radius.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Requested lattice exceeds the configured node budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Fields or kernels defined on different lattices were combined.
class LatticeMismatchError : public Error {
 public:
  using Error::Error;
};

/// Arguments violate a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The Monte Carlo sampler hit its rejection cap or an inconsistent rate.
class SamplerError : public Error {
 public:
  using Error::Error;
};

/// The uniformization series needed more terms than the hard cap allows.
class SeriesTruncationError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace stabledom
