#pragma once

#include <cstdint>

namespace faiv {

/// Exact byte accounting for one session, split by message class.
struct RateStats {
  int width = 0;
  int height = 0;
  uint64_t frameCount = 0;
  uint64_t sourceMessages = 0;
  uint64_t drivingMessages = 0;
  uint64_t sourceBytes = 0;
  uint64_t drivingBytes = 0;
  /// Fixed-header bytes, included in the two class totals above.
  uint64_t headerBytes = 0;
  /// Base-codec payload bytes of driving messages.
  uint64_t drivingPayloadBytes = 0;

  uint64_t totalBytes() const noexcept { return sourceBytes + drivingBytes; }
  bool operator==(const RateStats&) const = default;
};

/// Total transmitted bits / (width * height * frameCount).
double bitsPerPixel(const RateStats& stats);

/// Driving-class bits / (width * height * drivingMessages); 0 without
/// driving messages.
double drivingBitsPerPixel(const RateStats& stats);

} // namespace faiv
