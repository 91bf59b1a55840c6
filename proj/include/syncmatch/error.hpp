#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace syncmatch {

enum class ErrorKind {
  InvalidArgument,
  DegenerateScale,
  AmbiguousProjection,
  EmptyPointcloud,
  InvalidNeighborOrder,
  InsufficientTargets,
  InsufficientSupport,
  DegenerateGeometry,
  NoConsensus,
  DisconnectedGraph,
  SynchronizationCollapse,
  AdjacentPairFailure,
  EmptyReport,
  GenerationFailure,
  IOFailure,
  InputMismatch,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `frame()` names the offending frame for topology
/// failures (disconnected frame, collapsed block) when one is known.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> frame = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> frame() const noexcept { return frame_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> frame_;
};

}  // namespace syncmatch
