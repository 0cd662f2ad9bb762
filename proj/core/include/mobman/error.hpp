#pragma once

#include <stdexcept>
#include <string>

namespace mobman {

enum class ErrorKind {
  EmptySelection,
  DegenerateCloud,
  InvalidParameter,
  NoGraspFound,
  NoRimFound,
  UnknownFrame,
  DimensionMismatch,
  NonFiniteTarget,
  EpisodeOver,
  BadModel,
  BadScenario,
};

const char* to_string(ErrorKind kind);

/// Single exception type for all contract violations; `kind()` identifies
/// which contract was broken so callers and tests can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mobman
