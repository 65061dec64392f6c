#include "faiv/synthetic_backend.hpp"

#include "faiv/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace faiv {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kSuperSamples = 4;

using Mat3 = Eigen::Matrix3d;

// R = Rz(roll) * Rx(pitch) * Ry(yaw); image x right, y down.
Mat3 rotation(const EulerPose& pose) {
  const double y = pose.yaw * kDeg, p = pose.pitch * kDeg, r = pose.roll * kDeg;
  Mat3 ry, rx, rz;
  ry << std::cos(y), 0, std::sin(y), 0, 1, 0, -std::sin(y), 0, std::cos(y);
  rx << 1, 0, 0, 0, std::cos(p), -std::sin(p), 0, std::sin(p), std::cos(p);
  rz << std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r), 0, 0, 0, 1;
  return rz * rx * ry;
}

EulerPose anglesFrom(const Mat3& r) {
  EulerPose pose;
  pose.pitch = std::asin(std::clamp(r(2, 1), -1.0, 1.0)) / kDeg;
  pose.yaw = std::atan2(-r(2, 0), r(2, 2)) / kDeg;
  pose.roll = std::atan2(-r(0, 1), r(1, 1)) / kDeg;
  return pose;
}

Eigen::Vector3d modelPoint(const Point2& uv, const AvatarParams& params) {
  return {uv.x * params.axisA, uv.y * params.axisB, kFaceDepth * params.axisA};
}

double colorDistance(double r, double g, double b, const Rgb& ref) {
  return std::sqrt((r - ref[0]) * (r - ref[0]) + (g - ref[1]) * (g - ref[1]) +
                   (b - ref[2]) * (b - ref[2]));
}

double colorDistance(const Rgb& a, const Rgb& b) { return colorDistance(a[0], a[1], a[2], b); }

Rgb parseRgb(const std::string& text) {
  Rgb out{};
  std::istringstream in(text);
  for (int i = 0; i < 3; ++i) {
    int v = -1;
    char sep = ',';
    if (i > 0) in >> sep;
    in >> v;
    if (!in || sep != ',' || v < 0 || v > 255) {
      throw Error(ErrorCode::ConfigError, "bad colour '" + text + "'");
    }
    out[i] = static_cast<uint8_t>(v);
  }
  return out;
}

std::string formatRgb(const Rgb& c) {
  return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]);
}

// Normalised ellipse radius of (x, y) relative to the fitted ellipse.
struct EllipseFrame {
  double cx, cy, ca, sa, a, b;
  EllipseFrame(double cx_, double cy_, double angle, double a_, double b_)
      : cx(cx_), cy(cy_), ca(std::cos(angle)), sa(std::sin(angle)), a(a_), b(b_) {}
  double rho(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double u = ca * dx + sa * dy;
    const double v = -sa * dx + ca * dy;
    return std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
  }
};

} // namespace

// ---------------------------------------------------------------------------
// Parameters

const std::array<Point2, kSyntheticLandmarkCount>& fiducialLayout() {
  static const std::array<Point2, kSyntheticLandmarkCount> layout = [] {
    std::array<Point2, kSyntheticLandmarkCount> pts{};
    constexpr double kGrid[4] = {-0.45, -0.15, 0.15, 0.45};
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {kGrid[i % 4], kGrid[i / 4]};
    return pts;
  }();
  return layout;
}

void AvatarParams::validate() const {
  if (!(axisA > 0.0) || !(axisB > 0.0) || !(fiducialRadius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "avatar axes and fiducial radius must be positive");
  }
  if (colorDistance(skin, background) < 16.0) {
    throw Error(ErrorCode::InvalidArgument, "skin and background colours too similar");
  }
  for (double yaw = -60.0; yaw <= 60.0; yaw += 15.0) {
    for (double pitch = -60.0; pitch <= 60.0; pitch += 15.0) {
      const Landmarks lm = projectFiducials({yaw, pitch, 0.0}, *this, 0, 0);
      for (std::size_t i = 0; i < lm.size(); ++i) {
        for (std::size_t j = i + 1; j < lm.size(); ++j) {
          const double d = std::hypot(lm.points[i].x - lm.points[j].x, lm.points[i].y - lm.points[j].y);
          if (d <= 2.0 * fiducialRadius) {
            throw Error(ErrorCode::InvalidArgument, "fiducial discs overlap at some pose");
          }
        }
      }
    }
  }
}

KeyValueConfig AvatarParams::toConfig() const {
  KeyValueConfig cfg;
  cfg.set("identity_seed", std::to_string(identitySeed));
  cfg.set("skin", formatRgb(skin));
  cfg.set("eye", formatRgb(eye));
  cfg.set("mouth", formatRgb(mouth));
  cfg.set("background", formatRgb(background));
  std::ostringstream num;
  num.precision(17);
  auto put = [&](const char* key, double v) {
    num.str("");
    num << v;
    cfg.set(key, num.str());
  };
  put("axis_a", axisA);
  put("axis_b", axisB);
  put("fiducial_radius", fiducialRadius);
  put("offset_x", offsetX);
  put("offset_y", offsetY);
  return cfg;
}

AvatarParams AvatarParams::fromConfig(const KeyValueConfig& cfg) {
  AvatarParams p;
  p.identitySeed = static_cast<uint64_t>(cfg.integer("identity_seed", 0));
  if (auto v = cfg.get("skin")) p.skin = parseRgb(*v);
  if (auto v = cfg.get("eye")) p.eye = parseRgb(*v);
  if (auto v = cfg.get("mouth")) p.mouth = parseRgb(*v);
  if (auto v = cfg.get("background")) p.background = parseRgb(*v);
  p.axisA = cfg.number("axis_a", p.axisA);
  p.axisB = cfg.number("axis_b", p.axisB);
  p.fiducialRadius = cfg.number("fiducial_radius", p.fiducialRadius);
  p.offsetX = cfg.number("offset_x", p.offsetX);
  p.offsetY = cfg.number("offset_y", p.offsetY);
  p.validate();
  return p;
}

AvatarParams defaultAvatarParams(int size, uint64_t identitySeed) {
  AvatarParams p;
  p.identitySeed = identitySeed;
  p.axisA = 0.30 * size;
  p.axisB = 0.38 * size;
  p.fiducialRadius = 0.07 * p.axisA;
  // SplitMix64 palette jitter in [-8, 8].
  uint64_t state = identitySeed;
  auto jitter = [&state]() {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<int>(z % 17) - 8;
  };
  if (identitySeed != 0) {
    for (auto* c : {&p.skin, &p.eye, &p.mouth}) {
      for (auto& v : *c) v = static_cast<uint8_t>(std::clamp(v + jitter(), 0, 255));
    }
  }
  return p;
}

Landmarks projectFiducials(const EulerPose& pose, const AvatarParams& params, int width,
                           int height) {
  const Mat3 r = rotation(pose);
  const double cx = width / 2.0 + params.offsetX;
  const double cy = height / 2.0 + params.offsetY;
  Landmarks lm;
  for (const Point2& uv : fiducialLayout()) {
    const Eigen::Vector3d q = r * modelPoint(uv, params);
    lm.points.push_back({cx + q.x(), cy + q.y()});
  }
  return lm;
}

// ---------------------------------------------------------------------------
// Renderer

RenderedAvatar renderAvatar(const EulerPose& pose, const AvatarParams& params, int width,
                            int height) {
  validatePose(pose);
  if (std::abs(pose.yaw) > kMaxRenderAngle || std::abs(pose.pitch) > kMaxRenderAngle) {
    throw Error(ErrorCode::OutOfRange, "avatar renders |yaw|, |pitch| <= 75 degrees");
  }
  params.validate();
  Frame::checkDimensions(width, height);

  const double cx = width / 2.0 + params.offsetX;
  const double cy = height / 2.0 + params.offsetY;
  const double semiA = params.axisA * std::cos(pose.yaw * kDeg);
  const double semiB = params.axisB * std::cos(pose.pitch * kDeg);
  const double roll = pose.roll * kDeg;
  const EllipseFrame ellipse(cx, cy, roll, semiA, semiB);
  const double minAxis = std::min(semiA, semiB);

  const Landmarks lm = projectFiducials(pose, params, width, height);
  const double radius = params.fiducialRadius;

  const double ex = std::hypot(semiA * std::cos(roll), semiB * std::sin(roll));
  const double ey = std::hypot(semiA * std::sin(roll), semiB * std::cos(roll));
  double lx0 = cx - ex, lx1 = cx + ex, ly0 = cy - ey, ly1 = cy + ey;
  for (const Point2& p : lm.points) {
    lx0 = std::min(lx0, p.x - radius);
    lx1 = std::max(lx1, p.x + radius);
    ly0 = std::min(ly0, p.y - radius);
    ly1 = std::max(ly1, p.y + radius);
  }
  // Everything outside this window stays background.
  const int x0 = std::max(0, static_cast<int>(std::floor(lx0)) - 1);
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(lx1)) + 1);
  const int y0 = std::max(0, static_cast<int>(std::floor(ly0)) - 1);
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(ly1)) + 1);
  RenderedAvatar out{Frame(width, height, params.background), lm, BBox{}, Mask(width, height)};
  if (x1 < x0 || y1 < y0) return out;
  const int rw = x1 - x0 + 1, rh = y1 - y0 + 1;
  const std::size_t n = static_cast<std::size_t>(rw) * rh;
  auto local = [&](int x, int y) {
    return static_cast<std::size_t>(y - y0) * rw + static_cast<std::size_t>(x - x0);
  };
  std::array<std::vector<double>, 3> color;
  for (int c = 0; c < 3; ++c) color[c].assign(n, params.background[c]);
  std::vector<double> coverage(n, 0.0);

  auto sampleCoverage = [](auto inside, double x, double y) {
    int hits = 0;
    for (int j = 0; j < kSuperSamples; ++j) {
      for (int i = 0; i < kSuperSamples; ++i) {
        const double sx = x + (i + 0.5) / kSuperSamples - 0.5;
        const double sy = y + (j + 0.5) / kSuperSamples - 0.5;
        if (inside(sx, sy)) ++hits;
      }
    }
    return static_cast<double>(hits) / (kSuperSamples * kSuperSamples);
  };

  auto insideEllipse = [&](double x, double y) { return ellipse.rho(x, y) <= 1.0; };
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double slack = (ellipse.rho(x, y) - 1.0) * minAxis;
      double cov;
      if (slack < -0.75) {
        cov = 1.0;
      } else if (slack > 0.75) {
        cov = 0.0;
      } else {
        cov = sampleCoverage(insideEllipse, x, y);
      }
      const std::size_t idx = local(x, y);
      coverage[idx] = cov;
      for (int c = 0; c < 3; ++c) color[c][idx] += cov * (params.skin[c] - params.background[c]);
    }
  }

  for (std::size_t k = 0; k < lm.size(); ++k) {
    const Rgb& ink = k < 8 ? params.eye : params.mouth;
    const Point2 p = lm.points[k];
    auto insideDisc = [&](double x, double y) { return std::hypot(x - p.x, y - p.y) <= radius; };
    const int bx0 = std::max(x0, static_cast<int>(std::floor(p.x - radius)) - 1);
    const int bx1 = std::min(x1, static_cast<int>(std::ceil(p.x + radius)) + 1);
    const int by0 = std::max(y0, static_cast<int>(std::floor(p.y - radius)) - 1);
    const int by1 = std::min(y1, static_cast<int>(std::ceil(p.y + radius)) + 1);
    for (int y = by0; y <= by1; ++y) {
      for (int x = bx0; x <= bx1; ++x) {
        const double slack = std::hypot(x - p.x, y - p.y) - radius;
        double cov;
        if (slack < -0.75) {
          cov = 1.0;
        } else if (slack > 0.75) {
          continue;
        } else {
          cov = sampleCoverage(insideDisc, x, y);
        }
        const std::size_t idx = local(x, y);
        for (int c = 0; c < 3; ++c) color[c][idx] += cov * (ink[c] - color[c][idx]);
      }
    }
  }

  int bx0 = width, by0 = height, bx1 = -1, by1 = -1;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const std::size_t idx = local(x, y);
      bool differs = false;
      for (int c = 0; c < 3; ++c) {
        const uint8_t v = toSample(color[c][idx]);
        out.frame.at(c, x, y) = v;
        differs = differs || v != params.background[c];
      }
      out.mask.at(x, y) = toSample(coverage[idx] * 255.0);
      if (differs) {
        bx0 = std::min(bx0, x);
        bx1 = std::max(bx1, x);
        by0 = std::min(by0, y);
        by1 = std::max(by1, y);
      }
    }
  }
  if (bx1 >= 0) {
    out.box = {bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Face detector

BBox SyntheticFaceDetector::detect(const Image& frame) const {
  // Background is the most frequent colour on the frame border.
  std::map<std::array<uint8_t, 3>, int> counts;
  auto vote = [&](int x, int y) {
    ++counts[{frame.at(0, x, y), frame.at(1, x, y), frame.at(2, x, y)}];
  };
  for (int x = 0; x < frame.width(); ++x) {
    vote(x, 0);
    vote(x, frame.height() - 1);
  }
  for (int y = 1; y + 1 < frame.height(); ++y) {
    vote(0, y);
    vote(frame.width() - 1, y);
  }
  auto bg = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
              return a.second < b.second;
            })->first;

  int x0 = frame.width(), y0 = frame.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (frame.at(0, x, y) != bg[0] || frame.at(1, x, y) != bg[1] || frame.at(2, x, y) != bg[2]) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) {
    throw Error(ErrorCode::NoFace, "no face in frame");
  }
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// ---------------------------------------------------------------------------
// Segmenter

std::optional<EllipseFit> SyntheticSegmenter::fitEllipse(const Image& frame, const BBox& box) const {
  const BBox region = box.inflated(0.1).clippedTo(frame.width(), frame.height());
  if (region.empty()) return std::nullopt;
  const double span = colorDistance(params_.skin, params_.background);
  const double skip2 = (0.15 * span) * (0.15 * span);
  uint32_t lastRgb = 0xffffffffu;
  double lastF = 0.0;
  double m0 = 0, mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
  for (int y = region.y; y < region.y + region.h; ++y) {
    for (int x = region.x; x < region.x + region.w; ++x) {
      const uint32_t rgb = static_cast<uint32_t>(frame.at(0, x, y)) << 16 |
                           static_cast<uint32_t>(frame.at(1, x, y)) << 8 | frame.at(2, x, y);
      if (rgb != lastRgb) {
        // Flat regions repeat one colour, so the ramp is cached per colour.
        lastRgb = rgb;
        const double dr = static_cast<double>(rgb >> 16) - params_.background[0];
        const double dg = static_cast<double>((rgb >> 8) & 0xff) - params_.background[1];
        const double db = static_cast<double>(rgb & 0xff) - params_.background[2];
        const double d2 = dr * dr + dg * dg + db * db;
        // Symmetric ramp about half coverage keeps the centroid unbiased on
        // anti-aliased or blurred edges.
        lastF = d2 <= skip2 ? 0.0 : std::clamp((std::sqrt(d2) / span - 0.15) / 0.7, 0.0, 1.0);
      }
      const double f = lastF;
      if (f == 0.0) continue;
      m0 += f;
      mx += f * x;
      my += f * y;
      mxx += f * x * x;
      myy += f * y * y;
      mxy += f * x * y;
    }
  }
  if (m0 < 16.0 || m0 < 0.02 * region.w * region.h) return std::nullopt;
  EllipseFit fit;
  fit.mass = m0;
  fit.cx = mx / m0;
  fit.cy = my / m0;
  const double sxx = mxx / m0 - fit.cx * fit.cx;
  const double syy = myy / m0 - fit.cy * fit.cy;
  const double sxy = mxy / m0 - fit.cx * fit.cy;
  const double tr = sxx + syy;
  const double disc = std::sqrt(std::max(0.0, (sxx - syy) * (sxx - syy) / 4.0 + sxy * sxy));
  const double l1 = tr / 2.0 + disc, l2 = std::max(tr / 2.0 - disc, 0.0);
  fit.semiMajor = 2.0 * std::sqrt(l1);
  fit.semiMinor = 2.0 * std::sqrt(l2);
  fit.angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  if (fit.semiMinor < 1.0) return std::nullopt;
  return fit;
}

Mask SyntheticSegmenter::segment(const Image& frame, const BBox& box) const {
  Mask mask(frame.width(), frame.height());
  const auto fit = fitEllipse(frame, box);
  if (!fit) return mask;
  const BBox region = box.inflated(0.1).clippedTo(frame.width(), frame.height());
  const EllipseFrame e(fit->cx, fit->cy, fit->angle, fit->semiMajor, fit->semiMinor);
  for (int y = region.y; y < region.y + region.h; ++y) {
    for (int x = region.x; x < region.x + region.w; ++x) {
      const double rho = e.rho(x, y);
      // Approximate distance to the boundary along the ray from the centre.
      const double r = std::sqrt((x - fit->cx) * (x - fit->cx) + (y - fit->cy) * (y - fit->cy));
      const double dist = rho > 0.0 ? (rho - 1.0) * r / rho : -fit->semiMinor;
      mask.at(x, y) = toSample(std::clamp(0.5 - dist / 2.0, 0.0, 1.0) * 255.0);
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Landmark detector

namespace {

struct Blob {
  double mass = 0.0;
  double x = 0.0;
  double y = 0.0;
};

std::vector<Blob> components(const std::vector<double>& darkness, int w, int h, double threshold) {
  std::vector<int> label(darkness.size(), -1);
  std::vector<Blob> blobs;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (label[start] >= 0 || darkness[start] <= threshold) continue;
    Blob blob;
    const int id = static_cast<int>(blobs.size());
    label[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      const int x = idx % w, y = idx / w;
      const double wgt = darkness[idx] - threshold;
      blob.mass += wgt;
      blob.x += wgt * x;
      blob.y += wgt * y;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int nidx = ny * w + nx;
          if (label[nidx] < 0 && darkness[nidx] > threshold) {
            label[nidx] = id;
            stack.push_back(nidx);
          }
        }
      }
    }
    blob.x /= blob.mass;
    blob.y /= blob.mass;
    blobs.push_back(blob);
  }
  return blobs;
}

// Height of the kSyntheticLandmarkCount-th strongest local maximum of
// `darkness`, counting maxima closer than `separation` as one; the weakest
// maximum when fewer exist, 0 when there are none.
double separatedPeakLevel(const std::vector<double>& darkness, int w, int h, double separation) {
  struct Peak {
    double value;
    int x, y;
  };
  std::vector<Peak> candidates;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = darkness[static_cast<std::size_t>(y) * w + x];
      if (v <= 0.0) continue;
      bool isMax = true;
      for (int dy = -1; dy <= 1 && isMax; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (darkness[static_cast<std::size_t>(ny) * w + nx] > v) {
            isMax = false;
            break;
          }
        }
      }
      if (isMax) candidates.push_back({v, x, y});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Peak& a, const Peak& b) { return a.value > b.value; });
  std::vector<Peak> kept;
  for (const Peak& c : candidates) {
    const bool near = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
      return std::hypot(k.x - c.x, k.y - c.y) < separation;
    });
    if (near) continue;
    kept.push_back(c);
    if (kept.size() == kSyntheticLandmarkCount) break;
  }
  return kept.empty() ? 0.0 : kept.back().value;
}

// Orders blob centroids into the canonical 4x4 layout. The fiducials are
// coplanar and the projection is affine, so whitening the centroids by their
// covariance leaves a rotated square lattice. The rotation comes from
// nearest-neighbour directions modulo 90 degrees (valid while the in-plane
// rotation stays within +-45 degrees); rows are then split by y and each row
// sorted by x.
std::vector<Point2> orderGrid(const std::vector<Point2>& pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const Point2& p : pts) mean += Eigen::Vector2d(p.x, p.y);
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Point2& p : pts) {
    const Eigen::Vector2d d = Eigen::Vector2d(p.x, p.y) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Matrix2d whiten = eig.operatorInverseSqrt();

  std::vector<Eigen::Vector2d> white;
  for (const Point2& p : pts) white.push_back(whiten * (Eigen::Vector2d(p.x, p.y) - mean));

  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < white.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector2d dir = Eigen::Vector2d::Zero();
    for (std::size_t j = 0; j < white.size(); ++j) {
      if (i == j) continue;
      const double d = (white[j] - white[i]).norm();
      if (d < best) {
        best = d;
        dir = white[j] - white[i];
      }
    }
    const double theta = std::atan2(dir.y(), dir.x());
    s += std::sin(4.0 * theta);
    c += std::cos(4.0 * theta);
  }
  const double angle = std::atan2(s, c) / 4.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  std::vector<std::pair<Eigen::Vector2d, std::size_t>> aligned;
  for (std::size_t i = 0; i < white.size(); ++i) {
    const Eigen::Vector2d& w = white[i];
    aligned.push_back({{ca * w.x() + sa * w.y(), -sa * w.x() + ca * w.y()}, i});
  }
  std::sort(aligned.begin(), aligned.end(),
            [](const auto& a, const auto& b) { return a.first.y() < b.first.y(); });
  std::vector<Point2> out;
  for (std::size_t row = 0; row < 4; ++row) {
    auto first = aligned.begin() + static_cast<std::ptrdiff_t>(row * 4);
    std::sort(first, first + 4, [](const auto& a, const auto& b) { return a.first.x() < b.first.x(); });
    for (auto it = first; it != first + 4; ++it) out.push_back(pts[it->second]);
  }
  return out;
}

} // namespace

Landmarks SyntheticLandmarkDetector::detect(const BBox& box, const Image& frame) const {
  SyntheticSegmenter segmenter(params_);
  const auto fit = segmenter.fitEllipse(frame, box);
  if (!fit) {
    throw Error(ErrorCode::LandmarkFailure, "no face region for landmarks", 0);
  }
  const BBox region = box.inflated(0.1).clippedTo(frame.width(), frame.height());
  const EllipseFrame e(fit->cx, fit->cy, fit->angle, fit->semiMajor, fit->semiMinor);

  const int w = region.w, h = region.h;
  std::vector<double> lum(static_cast<std::size_t>(w) * h, 0.0);
  std::vector<char> inside(lum.size(), 0);
  std::vector<double> core;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int fx = region.x + x, fy = region.y + y;
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      lum[idx] = luminance(frame.at(0, fx, fy), frame.at(1, fx, fy), frame.at(2, fx, fy));
      const double rho = e.rho(fx, fy);
      inside[idx] = rho < 1.1;
      if (rho < 0.8) core.push_back(lum[idx]);
    }
  }
  if (core.empty()) {
    throw Error(ErrorCode::LandmarkFailure, "face region too small", 0);
  }
  std::nth_element(core.begin(), core.begin() + static_cast<std::ptrdiff_t>(core.size() / 2), core.end());
  const double skinLum = core[core.size() / 2];

  std::vector<double> darkness(lum.size(), 0.0);
  for (std::size_t i = 0; i < lum.size(); ++i) {
    if (inside[i]) darkness[i] = std::max(0.0, skinLum - lum[i]);
  }
  // Thresholds are relative to the weakest expected fiducial so that a
  // partially blurred frame (strong and weak discs mixed) still separates
  // neighbouring blurred discs.
  const double level = separatedPeakLevel(darkness, w, h, 2.0 * params_.fiducialRadius);
  constexpr double kMinContrast = 4.0;
  std::size_t bestCount = 0;
  if (level >= kMinContrast) {
    // Lowest threshold first: more pixels per centroid. Merged neighbours
    // lower the count and push the search to a higher threshold; a weak
    // 16th component means noise filled in for a merged pair.
    for (double fraction : {0.4, 0.5, 0.6, 0.7, 0.8}) {
      auto blobs = components(darkness, w, h, fraction * level);
      bestCount = std::max(bestCount, blobs.size());
      if (blobs.size() < kSyntheticLandmarkCount) continue;
      std::stable_sort(blobs.begin(), blobs.end(),
                       [](const Blob& a, const Blob& b) { return a.mass > b.mass; });
      if (blobs[kSyntheticLandmarkCount - 1].mass < 0.25 * blobs[kSyntheticLandmarkCount / 2].mass) {
        continue;
      }
      blobs.resize(kSyntheticLandmarkCount);
      std::vector<Point2> pts;
      for (const Blob& b : blobs) pts.push_back({region.x + b.x, region.y + b.y});
      return Landmarks{orderGrid(pts)};
    }
  }
  throw Error(ErrorCode::LandmarkFailure,
              "found " + std::to_string(bestCount) + " of " +
                  std::to_string(kSyntheticLandmarkCount) + " fiducials",
              static_cast<int64_t>(bestCount));
}

// ---------------------------------------------------------------------------
// Pose estimator

SyntheticPoseEstimator::SyntheticPoseEstimator(AvatarParams params)
    : params_(params), segmenter_(params), landmarks_(params) {}

EulerPose SyntheticPoseEstimator::solve(const Landmarks& landmarks, double centerX,
                                        double centerY) const {
  if (landmarks.size() != kSyntheticLandmarkCount) {
    throw Error(ErrorCode::LandmarkFailure, "pose needs all fiducials",
                static_cast<int64_t>(landmarks.size()));
  }
  const auto& layout = fiducialLayout();
  Eigen::MatrixXd design(kSyntheticLandmarkCount, 3);
  Eigen::VectorXd tx(kSyntheticLandmarkCount), ty(kSyntheticLandmarkCount);
  for (std::size_t i = 0; i < kSyntheticLandmarkCount; ++i) {
    design.row(static_cast<Eigen::Index>(i)) = modelPoint(layout[i], params_).transpose();
    tx(static_cast<Eigen::Index>(i)) = landmarks.points[i].x - centerX;
    ty(static_cast<Eigen::Index>(i)) = landmarks.points[i].y - centerY;
  }
  const auto qr = design.colPivHouseholderQr();
  Eigen::Matrix<double, 2, 3> m;
  m.row(0) = qr.solve(tx).transpose();
  m.row(1) = qr.solve(ty).transpose();
  // Closest matrix with orthonormal rows.
  Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix<double, 2, 3> q =
      svd.matrixU() * svd.matrixV().leftCols<2>().transpose();
  Mat3 r;
  r.row(0) = q.row(0);
  r.row(1) = q.row(1);
  r.row(2) = q.row(0).cross(q.row(1));
  EulerPose pose = anglesFrom(r);

  // Gauss-Newton refinement of the reprojection error.
  auto residual = [&](const EulerPose& p) {
    const Mat3 rot = rotation(p);
    Eigen::VectorXd res(2 * kSyntheticLandmarkCount);
    for (std::size_t i = 0; i < kSyntheticLandmarkCount; ++i) {
      const Eigen::Vector3d v = rot * modelPoint(layout[i], params_);
      res(static_cast<Eigen::Index>(2 * i)) = v.x() - tx(static_cast<Eigen::Index>(i));
      res(static_cast<Eigen::Index>(2 * i + 1)) = v.y() - ty(static_cast<Eigen::Index>(i));
    }
    return res;
  };
  for (int iter = 0; iter < 8; ++iter) {
    const Eigen::VectorXd r0 = residual(pose);
    Eigen::MatrixXd jac(r0.size(), 3);
    constexpr double h = 1e-4;
    for (int k = 0; k < 3; ++k) {
      EulerPose step = pose;
      (k == 0 ? step.yaw : k == 1 ? step.pitch : step.roll) += h;
      jac.col(k) = (residual(step) - r0) / h;
    }
    const Eigen::Vector3d delta = (jac.transpose() * jac).ldlt().solve(-jac.transpose() * r0);
    pose.yaw += delta(0);
    pose.pitch += delta(1);
    pose.roll += delta(2);
    if (delta.norm() < 1e-7) break;
  }
  return pose;
}

EulerPose SyntheticPoseEstimator::estimate(const Image& frame, const BBox& box) const {
  const auto fit = segmenter_.fitEllipse(frame, box);
  if (!fit) {
    throw Error(ErrorCode::NoFace, "no face region for pose estimation");
  }
  return solve(landmarks_.detect(box, frame), fit->cx, fit->cy);
}

// ---------------------------------------------------------------------------
// Reenactor

FacePatch AffineReenactor::reenact(const SourceEntry& source, const Landmarks& driveLandmarks,
                                   const BBox& driveBox) const {
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::ReenactFailure, "source " + std::to_string(source.sourceId) + ": " + why,
                 source.sourceId);
  };
  const std::size_t n = driveLandmarks.size();
  if (n < 3 || source.landmarks.size() != n) {
    throw fail("landmark count mismatch");
  }
  if (driveBox.empty()) {
    throw fail("empty driving box");
  }
  checkPatch(source.faceCrop);

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd dx(static_cast<Eigen::Index>(n)), dy(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    design(row, 0) = source.landmarks.points[i].x;
    design(row, 1) = source.landmarks.points[i].y;
    design(row, 2) = 1.0;
    dx(row) = driveLandmarks.points[i].x;
    dy(row) = driveLandmarks.points[i].y;
  }
  const auto qr = design.colPivHouseholderQr();
  if (qr.rank() < 3) {
    throw fail("degenerate source landmarks");
  }
  const Eigen::Vector3d ax = qr.solve(dx);
  const Eigen::Vector3d ay = qr.solve(dy);
  Eigen::Matrix2d lin;
  lin << ax(0), ax(1), ay(0), ay(1);
  const double det = lin.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-6) {
    throw fail("degenerate driving landmarks");
  }
  const Eigen::Matrix2d inv = lin.inverse();
  const Eigen::Vector2d offset(ax(2), ay(2));

  const FacePatch& crop = source.faceCrop;
  FacePatch out{driveBox, Image(driveBox.w, driveBox.h), Mask(driveBox.w, driveBox.h)};
  const int cw = crop.box.w, ch = crop.box.h;
  const double a00 = inv(0, 0), a01 = inv(0, 1), a10 = inv(1, 0), a11 = inv(1, 1);
  std::array<std::span<const uint8_t>, kChannels> planes;
  for (int c = 0; c < kChannels; ++c) planes[c] = crop.pixels.plane(c);
  const auto maskData = crop.mask.data();
  for (int y = 0; y < driveBox.h; ++y) {
    const double fy = driveBox.y + y - offset.y();
    for (int x = 0; x < driveBox.w; ++x) {
      const double fx = driveBox.x + x - offset.x();
      const double u = a00 * fx + a01 * fy - crop.box.x;
      const double v = a10 * fx + a11 * fy - crop.box.y;
      if (u < -0.5 || v < -0.5 || u > cw - 0.5 || v > ch - 0.5) {
        continue; // outside the stored crop: zero coverage
      }
      const double uc = std::clamp(u, 0.0, cw - 1.0), vc = std::clamp(v, 0.0, ch - 1.0);
      const int u0 = static_cast<int>(uc), v0 = static_cast<int>(vc); // both >= 0
      const int u1 = std::min(u0 + 1, cw - 1), v1 = std::min(v0 + 1, ch - 1);
      const double fu = uc - u0, fv = vc - v0;
      const std::size_t i00 = static_cast<std::size_t>(v0) * cw + u0;
      const std::size_t i01 = static_cast<std::size_t>(v0) * cw + u1;
      const std::size_t i10 = static_cast<std::size_t>(v1) * cw + u0;
      const std::size_t i11 = static_cast<std::size_t>(v1) * cw + u1;
      auto lerp = [&](std::span<const uint8_t> p) {
        return (p[i00] * (1 - fu) + p[i01] * fu) * (1 - fv) + (p[i10] * (1 - fu) + p[i11] * fu) * fv;
      };
      for (int c = 0; c < kChannels; ++c) out.pixels.at(c, x, y) = toSample(lerp(planes[c]));
      out.mask.at(x, y) = toSample(lerp(maskData));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

BackendSuite makeSyntheticBackend(const AvatarParams& params) {
  params.validate();
  BackendSuite suite;
  suite.name = "synthetic";
  suite.version = "1";
  suite.detector = std::make_shared<SyntheticFaceDetector>(params);
  suite.poseEstimator = std::make_shared<SyntheticPoseEstimator>(params);
  suite.segmenter = std::make_shared<SyntheticSegmenter>(params);
  suite.landmarkDetector = std::make_shared<SyntheticLandmarkDetector>(params);
  suite.reenactor = std::make_shared<AffineReenactor>();
  return suite;
}

BackendSuite makeBackend(std::string_view name, const AvatarParams& params) {
  if (name == "synthetic") {
    return makeSyntheticBackend(params);
  }
  throw Error(ErrorCode::ConfigError, "unknown vision backend '" + std::string(name) + "'");
}

} // namespace faiv
