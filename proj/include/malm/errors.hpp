#pragma once

#include <stdexcept>
#include <string>

namespace malm {

/// Invalid arguments: dimension mismatches, bad configuration, unknown names.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A problem callback produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pivot block of a symmetric factorization fell below the singularity
/// threshold.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No shift in the trial schedule produced the required inertia.
class RegularizationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backtracking reached the step-length floor without sufficient decrease.
class LineSearchFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace malm
