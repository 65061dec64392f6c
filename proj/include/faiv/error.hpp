#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace faiv {

enum class ErrorCode {
  InvalidArgument,
  InvalidPose,
  DimensionMismatch,
  DuplicateVertex,
  EmptyMesh,
  DegenerateTriangle,
  CodecError,
  NoFace,
  LandmarkFailure,
  ReenactFailure,
  OutOfRange,
  ParseError,
  ProtocolDesync,
  IoError,
  ConfigError,
};

std::string_view errorCodeName(ErrorCode code);

/// Single exception type used across the library. `detail()` carries the
/// code-specific integer payload: byte offset for ParseError, landmark count
/// for LandmarkFailure, source id for ReenactFailure, frame index for
/// pipeline failures surfaced by the simulator.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message, int64_t detail = -1);

  ErrorCode code() const noexcept { return code_; }
  int64_t detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  int64_t detail_;
};

} // namespace faiv
