#pragma once

#include <stdexcept>
#include <string>

namespace cdistab {

/// Argument outside the mathematical domain of an operation (zero vector for an
/// angle, non-positive epsilon, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller misuse: mismatched coordinate tags, too-sparse trajectories, bad config.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested time or index outside the span covered by a trajectory.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The (J2(omega), b) pair is not controllable (b2 = 0).
class NotControllableError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A saturation candidate produced non-finite values.
class InvalidFunctionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Quadrature or table construction failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double achieved_tolerance)
      : std::runtime_error(what), achieved_tolerance_(achieved_tolerance) {}

  double achieved_tolerance() const { return achieved_tolerance_; }

 private:
  double achieved_tolerance_;
};

}  // namespace cdistab
