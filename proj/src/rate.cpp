#include "faiv/rate.hpp"

#include "faiv/error.hpp"

namespace faiv {

namespace {

double perPixel(uint64_t bytes, const RateStats& stats, uint64_t frames) {
  const double pixels = static_cast<double>(stats.width) * static_cast<double>(stats.height) *
                        static_cast<double>(frames);
  return static_cast<double>(bytes) * 8.0 / pixels;
}

} // namespace

double bitsPerPixel(const RateStats& stats) {
  if (stats.frameCount == 0 || stats.width <= 0 || stats.height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "bits per pixel needs at least one frame");
  }
  return perPixel(stats.totalBytes(), stats, stats.frameCount);
}

double drivingBitsPerPixel(const RateStats& stats) {
  if (stats.drivingMessages == 0) {
    return 0.0;
  }
  if (stats.width <= 0 || stats.height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "rate stats without frame dimensions");
  }
  return perPixel(stats.drivingBytes, stats, stats.drivingMessages);
}

} // namespace faiv
