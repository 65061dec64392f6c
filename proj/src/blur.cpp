#include "faiv/blur.hpp"

#include "faiv/error.hpp"

#include <algorithm>
#include <cmath>

namespace faiv {

namespace {

// dst += w * src over n samples; kept out of line so it vectorizes the same
// way for every caller.
[[gnu::noinline]] void accumulate(float* __restrict dst, const float* __restrict src, float w,
                                  int n) {
  for (int i = 0; i < n; ++i) dst[i] += w * src[i];
}

} // namespace

std::vector<double> gaussianKernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "blur sigma must be finite and non-negative");
  }
  if (sigma == 0.0) {
    return {1.0};
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussianBlurMasked(const Image& image, const Mask& mask, double sigma) {
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw Error(ErrorCode::DimensionMismatch, "blur mask does not match frame");
  }
  const auto kernel = gaussianKernel(sigma);
  Image out = image;
  if (kernel.size() == 1) {
    return out;
  }
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = image.width(), h = image.height();

  // Only pixels with non-zero coverage change.
  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) != 0) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) {
    return out;
  }
  const int ry0 = std::max(0, y0 - radius), ry1 = std::min(h - 1, y1 + radius);
  const int rw = x1 - x0 + 1;
  const int rh = ry1 - ry0 + 1;
  // Rows padded by edge replication so the inner loops carry no clamping.
  // Single precision keeps the taps vectorized four wide; the error stays
  // far below the final rounding to 8 bits.
  const int pw = rw + 2 * radius;
  std::vector<float> taps(kernel.begin(), kernel.end());
  std::vector<float> padded(static_cast<std::size_t>(pw));
  std::vector<float> horiz(static_cast<std::size_t>(rh) * rw);
  std::vector<float> column(static_cast<std::size_t>(rw));

  for (int c = 0; c < kChannels; ++c) {
    const auto plane = image.plane(c);
    for (int y = ry0; y <= ry1; ++y) {
      const uint8_t* row = plane.data() + static_cast<std::size_t>(y) * w;
      for (int i = 0; i < pw; ++i) padded[i] = row[std::clamp(x0 - radius + i, 0, w - 1)];
      float* dst = horiz.data() + static_cast<std::size_t>(y - ry0) * rw;
      std::fill(dst, dst + rw, 0.0f);
      for (int k = 0; k < 2 * radius + 1; ++k) {
        const float wk = taps[k];
        accumulate(dst, padded.data() + k, wk, rw);
      }
    }
    for (int y = y0; y <= y1; ++y) {
      int cx0 = x0, cx1 = x1;
      while (cx0 <= x1 && mask.at(cx0, y) == 0) ++cx0;
      while (cx1 >= cx0 && mask.at(cx1, y) == 0) --cx1;
      if (cx0 > cx1) continue;
      const int span = cx1 - cx0 + 1;
      float* col = column.data();
      std::fill(col, col + span, 0.0f);
      for (int k = -radius; k <= radius; ++k) {
        const float wk = taps[k + radius];
        const int sy = std::clamp(y + k, 0, h - 1);
        accumulate(col, horiz.data() + static_cast<std::size_t>(sy - ry0) * rw + (cx0 - x0), wk,
                   span);
      }
      for (int x = cx0; x <= cx1; ++x) {
        const uint8_t cov = mask.at(x, y);
        if (cov == 0) continue;
        const double orig = image.at(c, x, y);
        out.at(c, x, y) = toSample(orig + (column[x - cx0] - orig) * (cov / 255.0));
      }
    }
  }
  return out;
}

double defaultBlurSigma(const BBox& box) {
  const double diag = std::hypot(static_cast<double>(box.w), static_cast<double>(box.h));
  return std::clamp(diag / 64.0, 2.0, 8.0);
}

} // namespace faiv
