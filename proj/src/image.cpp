#include "faiv/image.hpp"

#include "faiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace faiv {

namespace {

void checkRasterSize(int width, int height) {
  if (width < 1 || height < 1 || width > kMaxFrameSide || height > kMaxFrameSide) {
    throw Error(ErrorCode::InvalidArgument, "raster size " + std::to_string(width) + "x" +
                                                std::to_string(height) + " out of range");
  }
}

} // namespace

Image::Image(int width, int height, uint8_t fill) : Image(width, height, {fill, fill, fill}) {}

Image::Image(int width, int height, std::array<uint8_t, kChannels> fill)
    : width_(width), height_(height) {
  checkRasterSize(width, height);
  for (int c = 0; c < kChannels; ++c) {
    planes_[c].assign(pixelCount(), fill[c]);
  }
}

Frame::Frame(int width, int height, uint8_t fill) : Frame(width, height, {fill, fill, fill}) {}

Frame::Frame(int width, int height, std::array<uint8_t, kChannels> fill)
    : Image(width, height, fill) {
  checkDimensions(width, height);
}

Frame::Frame(Image image) : Image(std::move(image)) { checkDimensions(width(), height()); }

void Frame::checkDimensions(int width, int height) {
  if (width < kMinFrameSide || height < kMinFrameSide || width > kMaxFrameSide ||
      height > kMaxFrameSide) {
    throw Error(ErrorCode::InvalidArgument, "frame size " + std::to_string(width) + "x" +
                                                std::to_string(height) +
                                                " outside [16, 8192]");
  }
}

bool BBox::fitsIn(int width, int height) const noexcept {
  return w >= 1 && h >= 1 && x >= 0 && y >= 0 && x + w <= width && y + h <= height;
}

BBox BBox::inflated(double fraction) const {
  const int dx = static_cast<int>(std::ceil(w * fraction / 2.0));
  const int dy = static_cast<int>(std::ceil(h * fraction / 2.0));
  return {x - dx, y - dy, w + 2 * dx, h + 2 * dy};
}

BBox BBox::clippedTo(int width, int height) const {
  const int x0 = std::clamp(x, 0, width);
  const int y0 = std::clamp(y, 0, height);
  const int x1 = std::clamp(x + w, 0, width);
  const int y1 = std::clamp(y + h, 0, height);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

Mask::Mask(int width, int height, uint8_t fill) : width_(width), height_(height) {
  checkRasterSize(width, height);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

double Mask::area() const {
  const uint64_t sum = std::accumulate(data_.begin(), data_.end(), uint64_t{0});
  return static_cast<double>(sum) / 255.0;
}

void checkSameSize(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

void checkPatch(const FacePatch& patch) {
  if (patch.pixels.width() != patch.box.w || patch.pixels.height() != patch.box.h ||
      patch.mask.width() != patch.box.w || patch.mask.height() != patch.box.h) {
    throw Error(ErrorCode::DimensionMismatch, "face patch raster does not match its box");
  }
}

Image crop(const Image& image, const BBox& box) {
  if (!box.fitsIn(image.width(), image.height())) {
    throw Error(ErrorCode::InvalidArgument, "crop box outside image");
  }
  Image out(box.w, box.h);
  for (int c = 0; c < kChannels; ++c) {
    for (int y = 0; y < box.h; ++y) {
      for (int x = 0; x < box.w; ++x) {
        out.at(c, x, y) = image.at(c, box.x + x, box.y + y);
      }
    }
  }
  return out;
}

Mask crop(const Mask& mask, const BBox& box) {
  if (!box.fitsIn(mask.width(), mask.height())) {
    throw Error(ErrorCode::InvalidArgument, "crop box outside mask");
  }
  Mask out(box.w, box.h);
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) {
      out.at(x, y) = mask.at(box.x + x, box.y + y);
    }
  }
  return out;
}

} // namespace faiv
