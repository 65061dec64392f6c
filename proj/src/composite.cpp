#include "faiv/error.hpp"
#include "faiv/vision.hpp"

#include <algorithm>

namespace faiv {

double featherWeight(int x, int y, int width, int height) {
  const int edge = std::min({x, y, width - 1 - x, height - 1 - y});
  return std::min(1.0, (edge + 1.0) / (kFeatherWidth + 1.0));
}

Frame composite(const FacePatch& face, const Frame& frame, const BBox& box) {
  checkPatch(face);
  if (face.box.w != box.w || face.box.h != box.h) {
    throw Error(ErrorCode::DimensionMismatch, "patch does not match composite box");
  }
  if (!box.fitsIn(frame.width(), frame.height())) {
    throw Error(ErrorCode::InvalidArgument, "composite box outside frame");
  }
  Frame out = frame;
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) {
      const double alpha = face.mask.at(x, y) / 255.0 * featherWeight(x, y, box.w, box.h);
      if (alpha == 0.0) continue;
      for (int c = 0; c < kChannels; ++c) {
        const double under = frame.at(c, box.x + x, box.y + y);
        const double over = face.pixels.at(c, x, y);
        out.at(c, box.x + x, box.y + y) = toSample(under + alpha * (over - under));
      }
    }
  }
  return out;
}

} // namespace faiv
