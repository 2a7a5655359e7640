#pragma once

#include <stdexcept>
#include <string>

namespace modalms {

//! Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Invalid configuration value or misuse of an API precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

//! Input file has a malformed header or is missing a required column.
class SchemaError : public Error {
 public:
  using Error::Error;
};

//! A cell in an input file could not be parsed as a number.
class ParseError : public Error {
 public:
  using Error::Error;
};

//! A dataset violates a structural requirement (non-finite values,
//! inconsistent dimensions, no observed responses).
class ValidityError : public Error {
 public:
  using Error::Error;
};

//! All kernel weights are zero, so no weighted density exists.
class DegenerateWeightsError : public Error {
 public:
  using Error::Error;
};

//! The covariate marginal density is zero at the query point.
class IsolatedPointError : public Error {
 public:
  using Error::Error;
};

//! Mean-shift iteration hit the iteration cap without converging.
class StallError : public Error {
 public:
  using Error::Error;
};

//! No mean-shift start converged, so no mode is available.
class EmptyModalSetError : public Error {
 public:
  using Error::Error;
};

//! A propensity model could not be fitted (separation, singularity).
class FitError : public Error {
 public:
  using Error::Error;
};

//! A fitted model was used before fitting, or with the wrong shape.
class StateError : public Error {
 public:
  using Error::Error;
};

//! A missing response could not be imputed.
class ImputationError : public Error {
 public:
  using Error::Error;
};

//! Too many cross-validation terms were skipped for the score to be trusted.
class UnreliableScoreError : public Error {
 public:
  using Error::Error;
};

//! No bandwidth pair in the search grid produced a reliable score.
class SelectionError : public Error {
 public:
  using Error::Error;
};

//! Two curves to be compared are not on the same mesh.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

//! A metric was evaluated on an empty set.
class DomainError : public Error {
 public:
  using Error::Error;
};

//! Too many Monte Carlo replicates failed for the study to be reported.
class ExperimentError : public Error {
 public:
  using Error::Error;
};

//! A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace modalms
