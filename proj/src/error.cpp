#include "procam/error.hpp"

namespace procam {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::PointAtInfinity: return "PointAtInfinity";
    case ErrorKind::GimbalLock: return "GimbalLock";
    case ErrorKind::ModelSingularity: return "ModelSingularity";
    case ErrorKind::NoRealRoot: return "NoRealRoot";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DegenerateAxis: return "DegenerateAxis";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InsufficientSupport: return "InsufficientSupport";
    case ErrorKind::OutOfFrame: return "OutOfFrame";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Schema: return "Schema";
  }
  return "Unknown";
}

Error Error::with_stage(std::string_view stage) const {
  std::string path(stage);
  if (!stage_.empty()) path += "/" + stage_;
  return Error(kind_, what(), path);
}

}  // namespace procam
