#include "faiv/error.hpp"

namespace faiv {

std::string_view errorCodeName(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidArgument: return "invalid-argument";
  case ErrorCode::InvalidPose: return "invalid-pose";
  case ErrorCode::DimensionMismatch: return "dimension-mismatch";
  case ErrorCode::DuplicateVertex: return "duplicate-vertex";
  case ErrorCode::EmptyMesh: return "empty-mesh";
  case ErrorCode::DegenerateTriangle: return "degenerate-triangle";
  case ErrorCode::CodecError: return "codec-error";
  case ErrorCode::NoFace: return "no-face";
  case ErrorCode::LandmarkFailure: return "landmark-failure";
  case ErrorCode::ReenactFailure: return "reenact-failure";
  case ErrorCode::OutOfRange: return "out-of-range";
  case ErrorCode::ParseError: return "parse-error";
  case ErrorCode::ProtocolDesync: return "protocol-desync";
  case ErrorCode::IoError: return "io-error";
  case ErrorCode::ConfigError: return "config-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, int64_t detail)
    : std::runtime_error(std::string(errorCodeName(code)) + ": " + message), code_(code),
      detail_(detail) {}

} // namespace faiv
