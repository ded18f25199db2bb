#pragma once

#include <stdexcept>
#include <string>

namespace choreo {

// Base of every error raised by the library. Callers that only care about
// "numerical failure vs. bad input" can catch NumericalError / InvalidInput.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Two bodies came closer than the collision guard radius.
class CollisionProximity : public NumericalError {
 public:
  CollisionProximity(double distance, double radius)
      : NumericalError("collision proximity: pair distance " + std::to_string(distance) +
                       " below guard radius " + std::to_string(radius)),
        distance_(distance) {}
  double distance() const { return distance_; }

 private:
  double distance_;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularJacobian : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NullSpaceAmbiguous : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateMode : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class AmbiguousClassification : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotBracketed : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class PeriodMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class NotCoprime : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class NotToroidal : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Requested (ell, m) does not satisfy k*ell - m = 0 (mod n). The bodies then
// trace several closed curves (a torus link) rather than one.
class NotChoreography : public InvalidInput {
 public:
  NotChoreography(const std::string& what, int curve_count)
      : InvalidInput(what), curve_count_(curve_count) {}
  int curve_count() const { return curve_count_; }

 private:
  int curve_count_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace choreo
