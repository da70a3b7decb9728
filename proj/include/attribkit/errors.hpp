#pragma once

#include <stdexcept>
#include <string>

namespace attribkit {

// Base class for all toolkit errors. The CLI maps subtrees to exit codes:
// ValidationError -> 1, IoError -> 2, anything else (internal) -> 3.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad inputs: malformed configuration, invalid probabilities, mismatched
// shapes, unknown identifiers.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Filesystem and parse failures on external files.
class IoError : public Error {
public:
  using Error::Error;
};

// Broken internal invariant; always a bug, never a user error.
class InternalError : public Error {
public:
  using Error::Error;
};

// A pool produced zero total mass, i.e. the pooled assignments contradict
// each other everywhere.
class AllZeroMassError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// Actor universes of two probability assignments differ.
class UniverseMismatchError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class UntrainedModelError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class TooFewAttributorsError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class EmptyTrainingSetError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class EmptyInputError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// Simulator produced no training incidents; nothing can be fit.
class NoTrainingIncidentsError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class UnknownIncidentError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// No prediction is correct even at threshold zero, so the recall
// denominator used by the precision/recall sweep is undefined.
class DegenerateRecallBaseError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

}  // namespace attribkit
