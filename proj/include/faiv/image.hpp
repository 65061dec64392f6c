#pragma once

// Raster model: planar 8-bit RGB images, face boxes, coverage masks and
// face patches.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace faiv {

inline constexpr int kChannels = 3;
inline constexpr int kMinFrameSide = 16;
inline constexpr int kMaxFrameSide = 8192;

/// Planar RGB raster of any size >= 1x1. Samples are stored row-major per
/// channel.
class Image {
public:
  Image() = default;
  Image(int width, int height, uint8_t fill = 0);
  Image(int width, int height, std::array<uint8_t, kChannels> fill);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixelCount() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  uint8_t at(int c, int x, int y) const { return planes_[c][index(x, y)]; }
  uint8_t& at(int c, int x, int y) { return planes_[c][index(x, y)]; }

  std::span<const uint8_t> plane(int c) const { return planes_[c]; }
  std::span<uint8_t> plane(int c) { return planes_[c]; }

  bool operator==(const Image&) const = default;

private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::array<std::vector<uint8_t>, kChannels> planes_;
};

/// A full video frame; sides are limited to [16, 8192].
class Frame : public Image {
public:
  Frame() = default;
  Frame(int width, int height, uint8_t fill = 0);
  Frame(int width, int height, std::array<uint8_t, kChannels> fill);
  explicit Frame(Image image);

  static void checkDimensions(int width, int height);
};

struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const BBox&) const = default;

  bool empty() const noexcept { return w <= 0 || h <= 0; }
  bool fitsIn(int width, int height) const noexcept;
  BBox inflated(double fraction) const;
  BBox translated(int dx, int dy) const { return {x + dx, y + dy, w, h}; }
  BBox clippedTo(int width, int height) const;
};

/// Per-pixel face coverage, 255 = face.
class Mask {
public:
  Mask() = default;
  Mask(int width, int height, uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  uint8_t& at(int x, int y) { return data_[index(x, y)]; }
  std::span<const uint8_t> data() const { return data_; }
  std::span<uint8_t> data() { return data_; }

  /// Sum of coverage / 255, i.e. the covered area in pixels.
  double area() const;

  bool operator==(const Mask&) const = default;

private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> data_;
};

/// Face raster restricted to `box`; pixels and mask have the box dimensions.
struct FacePatch {
  BBox box;
  Image pixels;
  Mask mask;

  bool operator==(const FacePatch&) const = default;
};

void checkSameSize(const Image& a, const Image& b);
void checkPatch(const FacePatch& patch);

/// Copies the `box` region; the box must lie inside the image.
Image crop(const Image& image, const BBox& box);
Mask crop(const Mask& mask, const BBox& box);

/// Rounds half away from zero and clamps to [0, 255]. Inline and libm-free
/// because every pixel path ends here.
inline uint8_t toSample(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  const int t = static_cast<int>(v); // v - t is exact below 256
  return static_cast<uint8_t>(t + (v - t >= 0.5 ? 1 : 0));
}

inline double luminance(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

} // namespace faiv
