#pragma once

#include "faiv/image.hpp"

#include <vector>

namespace faiv {

/// Normalized discrete Gaussian with radius ceil(3 sigma); {1} for sigma 0.
std::vector<double> gaussianKernel(double sigma);

/// Separable Gaussian blur of `image` (edge clamp) blended by mask coverage:
/// coverage 0 keeps the input pixel, 255 takes the blurred one.
Image gaussianBlurMasked(const Image& image, const Mask& mask, double sigma);

/// diag(box) / 64 clamped to [2, 8].
double defaultBlurSigma(const BBox& box);

} // namespace faiv
