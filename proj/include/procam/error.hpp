#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace procam {

enum class ErrorKind {
  NonPositiveDepth,
  DegenerateConfiguration,
  PointAtInfinity,
  GimbalLock,
  ModelSingularity,
  NoRealRoot,
  RankDeficient,
  NonConvergence,
  DegenerateAxis,
  DimensionMismatch,
  InsufficientSupport,
  OutOfFrame,
  LengthMismatch,
  InvalidArgument,
  Io,
  Schema,
};

std::string_view to_string(ErrorKind kind);

/// Error raised by every library operation. `stage` is filled in by the
/// pipeline drivers so a failure deep in a sub-step reports where it
/// happened (e.g. "camera/distortion-center").
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::string stage = {})
      : std::runtime_error(what), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

  /// Copy of this error with `stage` prepended to the stage path.
  Error with_stage(std::string_view stage) const;

 private:
  ErrorKind kind_;
  std::string stage_;
};

}  // namespace procam
