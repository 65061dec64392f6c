#pragma once

#include "faiv/image.hpp"

namespace faiv {

inline constexpr double kPsnrCap = 99.0;

/// Mean squared error over all samples of all channels.
double mse(const Image& a, const Image& b);

/// PSNR with MAX = 255, capped at 99 dB.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over channels; 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, valid windows only. Rasters smaller than the window use one
/// window spanning the shorter side.
double ssim(const Image& a, const Image& b);

} // namespace faiv
