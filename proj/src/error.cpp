#include "syncmatch/error.hpp"

namespace syncmatch {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::AmbiguousProjection: return "AmbiguousProjection";
    case ErrorKind::EmptyPointcloud: return "EmptyPointcloud";
    case ErrorKind::InvalidNeighborOrder: return "InvalidNeighborOrder";
    case ErrorKind::InsufficientTargets: return "InsufficientTargets";
    case ErrorKind::InsufficientSupport: return "InsufficientSupport";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::NoConsensus: return "NoConsensus";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::SynchronizationCollapse: return "SynchronizationCollapse";
    case ErrorKind::AdjacentPairFailure: return "AdjacentPairFailure";
    case ErrorKind::EmptyReport: return "EmptyReport";
    case ErrorKind::GenerationFailure: return "GenerationFailure";
    case ErrorKind::IOFailure: return "IOFailure";
    case ErrorKind::InputMismatch: return "InputMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::size_t> frame)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      frame_(frame) {}

}  // namespace syncmatch
