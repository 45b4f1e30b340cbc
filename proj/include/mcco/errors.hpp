#pragma once

#include <stdexcept>
#include <string>

namespace mcco {

// Base class for all toolkit errors so callers can catch one type.
class McCoError : public std::runtime_error {
 public:
  explicit McCoError(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public McCoError {
 public:
  DimensionMismatch(int stage, const std::string& what)
      : McCoError("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

class MissingStage : public McCoError {
 public:
  using McCoError::McCoError;
};

class NotDifferentiable : public McCoError {
 public:
  using McCoError::McCoError;
};

class OutOfSupport : public McCoError {
 public:
  using McCoError::McCoError;
};

class MissingConstant : public McCoError {
 public:
  using McCoError::McCoError;
};

class InfiniteCost : public McCoError {
 public:
  using McCoError::McCoError;
};

class CostGuardExceeded : public McCoError {
 public:
  using McCoError::McCoError;
};

class EmptyWindow : public McCoError {
 public:
  using McCoError::McCoError;
};

class TooFewSamples : public McCoError {
 public:
  using McCoError::McCoError;
};

class DegenerateFit : public McCoError {
 public:
  using McCoError::McCoError;
};

class InvalidParams : public McCoError {
 public:
  using McCoError::McCoError;
};

class SingularQaa : public McCoError {
 public:
  using McCoError::McCoError;
};

class NonFinite : public McCoError {
 public:
  using McCoError::McCoError;
};

}  // namespace mcco
