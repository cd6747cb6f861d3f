#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace meb {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Vector/matrix dimensions or action counts disagree.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// A round carries a propensity outside (0, 1].
struct NonPositivePropensity : Error {
  using Error::Error;
};

/// A round carries an error covariance that is asymmetric or has an
/// eigenvalue below the numerical PSD tolerance.
struct NonPsdErrorCov : Error {
  using Error::Error;
};

/// The matrix to invert has an estimated condition number above the
/// configured threshold (or is exactly singular).
struct SingularDesign : Error {
  using Error::Error;
};

/// An estimate was requested for an action with no absorbed rounds.
struct NoDataForAction : Error {
  using Error::Error;
};

/// A probability vector failed validation (negative entry or sum != 1).
struct InvalidDistribution : Error {
  using Error::Error;
};

/// Experiment configuration is inconsistent or unparseable.
struct ConfigInvalid : Error {
  using Error::Error;
};

/// File output failed.
struct IoError : Error {
  using Error::Error;
};

}  // namespace meb
