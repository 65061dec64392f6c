#include "faiv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace faiv {

double mse(const Image& a, const Image& b) {
  checkSameSize(a, b);
  double sum = 0.0;
  for (int c = 0; c < kChannels; ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = static_cast<double>(pa[i]) - pb[i];
      sum += d * d;
    }
  }
  return sum / (static_cast<double>(a.pixelCount()) * kChannels);
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0.0) {
    return kPsnrCap;
  }
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / e));
}

namespace {

std::vector<double> ssimWindow(int size) {
  std::vector<double> w(size);
  const double sigma = 1.5;
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    w[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode filtering of a row-major map. Loops run over x
// innermost so they vectorize.
std::vector<double> filterValid(const std::vector<double>& src, int width, int height,
                                const std::vector<double>& win) {
  const int n = static_cast<int>(win.size());
  const int ow = width - n + 1, oh = height - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(height) * ow, 0.0);
  for (int y = 0; y < height; ++y) {
    double* dst = tmp.data() + static_cast<std::size_t>(y) * ow;
    const double* row = src.data() + static_cast<std::size_t>(y) * width;
    for (int k = 0; k < n; ++k) {
      const double wk = win[k];
      for (int x = 0; x < ow; ++x) dst[x] += wk * row[x + k];
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    double* dst = out.data() + static_cast<std::size_t>(y) * ow;
    for (int k = 0; k < n; ++k) {
      const double wk = win[k];
      const double* row = tmp.data() + static_cast<std::size_t>(y + k) * ow;
      for (int x = 0; x < ow; ++x) dst[x] += wk * row[x];
    }
  }
  return out;
}

} // namespace

double ssim(const Image& a, const Image& b) {
  checkSameSize(a, b);
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  int size = std::min({11, a.width(), a.height()});
  if (size % 2 == 0) --size;
  const auto win = ssimWindow(size);
  const int w = a.width(), h = a.height();
  const int ow = w - size + 1, oh = h - size + 1;

  auto term = [&](double mx, double my, double mxx, double myy, double mxy) {
    const double vx = mxx - mx * mx;
    const double vy = myy - my * my;
    const double cov = mxy - mx * my;
    return ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
           ((mx * mx + my * my + c1) * (vx + vy + c2));
  };
  // Same operation order as filterValid, so a window holding one value in
  // each image yields bit-identical moments without filtering.
  auto flatMean = [&](double v) {
    double hsum = 0.0;
    for (double wk : win) hsum += wk * v;
    double vsum = 0.0;
    for (double wk : win) vsum += wk * hsum;
    return vsum;
  };

  // Summed-area table of "pixel differs from its right or lower neighbour".
  // A window with zero count is flat in both images.
  std::vector<int> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  auto satAt = [&](int x, int y) -> int& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
  auto windowFlat = [&](int x, int y) {
    return satAt(x + size, y + size) - satAt(x, y + size) - satAt(x + size, y) + satAt(x, y) == 0;
  };

  double total = 0.0;
  for (int c = 0; c < kChannels; ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    auto edge = [&](std::size_t i, std::size_t j) { return pa[i] != pa[j] || pb[i] != pb[j]; };
    for (int y = 0; y < h; ++y) {
      int rowSum = 0;
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const bool differs = (x + 1 < w && edge(i, i + 1)) || (y + 1 < h && edge(i, i + w));
        rowSum += differs ? 1 : 0;
        satAt(x + 1, y + 1) = satAt(x + 1, y) + rowSum;
      }
    }
    int rx0 = ow, ry0 = oh, rx1 = -1, ry1 = -1;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        if (!windowFlat(x, y)) {
          rx0 = std::min(rx0, x);
          rx1 = std::max(rx1, x);
          ry0 = std::min(ry0, y);
          ry1 = std::max(ry1, y);
        }
      }
    }

    // Full filtering only over the rectangle of non-flat windows.
    std::vector<double> mx, my, mxx, myy, mxy;
    const int rw = rx1 - rx0 + 1;
    if (rx1 >= 0) {
      const int iw = rw + size - 1, ih = ry1 - ry0 + size;
      const std::size_t n = static_cast<std::size_t>(iw) * ih;
      std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
      for (int sy = 0; sy < ih; ++sy) {
        for (int sx = 0; sx < iw; ++sx) {
          const std::size_t src = static_cast<std::size_t>(ry0 + sy) * w + (rx0 + sx);
          const std::size_t i = static_cast<std::size_t>(sy) * iw + sx;
          x[i] = pa[src];
          y[i] = pb[src];
          xx[i] = x[i] * x[i];
          yy[i] = y[i] * y[i];
          xy[i] = x[i] * y[i];
        }
      }
      mx = filterValid(x, iw, ih, win);
      my = filterValid(y, iw, ih, win);
      mxx = filterValid(xx, iw, ih, win);
      myy = filterValid(yy, iw, ih, win);
      mxy = filterValid(xy, iw, ih, win);
    }

    int cachedA = -1, cachedB = -1;
    double cachedTerm = 0.0;
    double sum = 0.0;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        if (x >= rx0 && x <= rx1 && y >= ry0 && y <= ry1) {
          const std::size_t i = static_cast<std::size_t>(y - ry0) * rw + (x - rx0);
          sum += term(mx[i], my[i], mxx[i], myy[i], mxy[i]);
          continue;
        }
        const std::size_t src = static_cast<std::size_t>(y) * w + x;
        const int av = pa[src], bv = pb[src];
        if (av != cachedA || bv != cachedB) {
          const double da = av, db = bv;
          cachedTerm = term(flatMean(da), flatMean(db), flatMean(da * da), flatMean(db * db),
                            flatMean(da * db));
          cachedA = av;
          cachedB = bv;
        }
        sum += cachedTerm;
      }
    }
    total += sum / (static_cast<double>(ow) * oh);
  }
  return total / kChannels;
}

} // namespace faiv
