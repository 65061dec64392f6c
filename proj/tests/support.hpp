#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include "faiv/geometry.hpp"
#include "faiv/image.hpp"
#include "faiv/session.hpp"
#include "faiv/source_pool.hpp"
#include "faiv/synthetic_backend.hpp"
#include "faiv/wire.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace faiv::testing {

inline Image randomImage(std::mt19937_64& rng, int w, int h) {
  Image img(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (int c = 0; c < kChannels; ++c) {
    for (uint8_t& v : img.plane(c)) v = static_cast<uint8_t>(d(rng));
  }
  return img;
}

/// Smooth content with some noise so codec and metric tests see realistic
/// statistics.
inline Image texturedImage(std::mt19937_64& rng, int w, int h) {
  Image img(w, h);
  std::uniform_real_distribution<double> phase(0.0, 6.28);
  std::normal_distribution<double> noise(0.0, 6.0);
  for (int c = 0; c < kChannels; ++c) {
    const double px = phase(rng), py = phase(rng);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = 128 + 60 * std::sin(x * 0.07 + px) * std::cos(y * 0.05 + py) + noise(rng);
        img.at(c, x, y) = toSample(v);
      }
    }
  }
  return img;
}

inline std::vector<AngularPoint> randomPoints(std::mt19937_64& rng, std::size_t n,
                                              double lo = -40.0, double hi = 40.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<AngularPoint> pts(n);
  for (auto& p : pts) p = {d(rng), d(rng)};
  return pts;
}

inline std::vector<MeshVertex> asVertices(const std::vector<AngularPoint>& pts) {
  std::vector<MeshVertex> v;
  for (std::size_t i = 0; i < pts.size(); ++i) v.push_back({static_cast<VertexId>(i), pts[i]});
  return v;
}

/// Closed point-in-triangle test with an absolute area tolerance.
inline bool insideTriangle(const std::array<AngularPoint, 3>& t, const AngularPoint& p,
                           double eps = 1e-9) {
  return orient2d(t[0], t[1], p) >= -eps && orient2d(t[1], t[2], p) >= -eps &&
         orient2d(t[2], t[0], p) >= -eps;
}

/// Brute-force empty-circumcircle check against every vertex.
inline bool emptyCircumcircles(const TriMesh& mesh) {
  for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
    const auto c = mesh.corners(t);
    const Triangle& ids = mesh.triangles()[t];
    for (const MeshVertex& v : mesh.vertices()) {
      if (v.id == ids[0] || v.id == ids[1] || v.id == ids[2]) continue;
      if (inCircumcircle(c[0], c[1], c[2], v.point)) return false;
    }
  }
  return true;
}

// Scalar-loop metric oracles written independently of the library.

inline double oracleMse(const Image& a, const Image& b) {
  long double acc = 0;
  for (int c = 0; c < kChannels; ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const long double d = static_cast<long double>(a.at(c, x, y)) - b.at(c, x, y);
        acc += d * d;
      }
  return static_cast<double>(acc / (3.0L * a.width() * a.height()));
}

inline double oraclePsnr(const Image& a, const Image& b) {
  const double m = oracleMse(a, b);
  if (m == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(255.0 * 255.0 / m));
}

inline double oracleSsim(const Image& a, const Image& b) {
  const int win = std::min({11, a.width(), a.height()});
  const double sigma = 1.5;
  std::vector<double> w(static_cast<std::size_t>(win) * win);
  double total = 0;
  const double mid = (win - 1) / 2.0;
  for (int j = 0; j < win; ++j)
    for (int i = 0; i < win; ++i) {
      const double g = std::exp(-((i - mid) * (i - mid) + (j - mid) * (j - mid)) / (2 * sigma * sigma));
      w[j * win + i] = g;
      total += g;
    }
  for (double& g : w) g /= total;
  const double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
  double sum = 0;
  for (int c = 0; c < kChannels; ++c) {
    double chan = 0;
    int count = 0;
    for (int y0 = 0; y0 + win <= a.height(); ++y0)
      for (int x0 = 0; x0 + win <= a.width(); ++x0) {
        double ma = 0, mb = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            ma += w[j * win + i] * a.at(c, x0 + i, y0 + j);
            mb += w[j * win + i] * b.at(c, x0 + i, y0 + j);
          }
        double va = 0, vb = 0, cov = 0;
        for (int j = 0; j < win; ++j)
          for (int i = 0; i < win; ++i) {
            const double da = a.at(c, x0 + i, y0 + j) - ma, db = b.at(c, x0 + i, y0 + j) - mb;
            va += w[j * win + i] * da * da;
            vb += w[j * win + i] * db * db;
            cov += w[j * win + i] * da * db;
          }
        chan += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    sum += chan / count;
  }
  return sum / kChannels;
}

/// Offline replay of the encoder's admission rule over quantized poses.
inline std::vector<bool> replaySourceDecisions(const std::vector<EulerPose>& poses, double threshold) {
  SourcePool pool(threshold);
  std::vector<bool> isSource;
  for (const EulerPose& raw : poses) {
    const EulerPose pose = quantizePose(raw);
    const bool need = std::holds_alternative<NeedNewSource>(pool.classify(pose));
    if (need) pool = pool.addSource(FacePatch{}, Landmarks{}, pose)->pool;
    isSource.push_back(need);
  }
  return isSource;
}

inline double maxLandmarkError(const Landmarks& a, const Landmarks& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::hypot(a.points[i].x - b.points[i].x, a.points[i].y - b.points[i].y));
  return worst;
}

/// Pose stream with yaw/pitch steps of Euclidean length <= maxStep degrees.
inline std::vector<EulerPose> randomPoseStream(std::mt19937_64& rng, int length, double maxStep) {
  std::uniform_real_distribution<double> start(-45, 45), unit(0, 1), roll(-5, 5);
  std::vector<EulerPose> poses;
  EulerPose p{start(rng), start(rng), roll(rng)};
  for (int i = 0; i < length; ++i) {
    poses.push_back(p);
    const double angle = unit(rng) * 6.283185307179586;
    const double len = unit(rng) * maxStep;
    p.yaw = std::clamp(p.yaw + len * std::cos(angle), -60.0, 60.0);
    p.pitch = std::clamp(p.pitch + len * std::sin(angle), -60.0, 60.0);
    p.roll = std::clamp(p.roll + roll(rng), -20.0, 20.0);
  }
  return poses;
}

struct ReplicaCheck {
  bool spacingHolds = true;
  bool classifyConsistent = true;
  bool digestsAgree = true;
  bool idsIncrease = true;
  std::size_t sources = 0;
};

/// Drives an encoder shadow pool and a decoder pool through the wire format:
/// the encoder decides from the quantized pose, the decoder only sees the
/// parsed message. Checks the pool invariants after every message.
inline ReplicaCheck replayReplicas(const std::vector<EulerPose>& poses, double threshold) {
  ReplicaCheck check;
  SourcePool encoder(threshold), decoder(threshold);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    WireMessage msg;
    msg.frameIndex = static_cast<uint32_t>(i);
    msg.pose = QuantizedPose::from(poses[i]);
    msg.box = {10, 10, 20, 20};
    const EulerPose pose = msg.pose.toPose();
    const ReenactPlan plan = encoder.classify(pose);
    const AngularPoint p = projectPose(pose);
    if (std::holds_alternative<NeedNewSource>(plan)) {
      if (encoder.nearestDistance(p) <= threshold) check.classifyConsistent = false;
      msg.type = MessageType::Source;
      const SourceId before = encoder.nextSourceId();
      auto admitted = encoder.addSource(FacePatch{}, Landmarks{}, pose);
      if (!admitted || admitted->sourceId != before) {
        check.idsIncrease = false;
        return check;
      }
      encoder = std::move(admitted->pool);
      ++check.sources;
    } else {
      msg.type = MessageType::Driving;
      if (encoder.nearestDistance(p) > threshold) check.classifyConsistent = false;
    }

    const WireMessage received = deserialize(serialize(msg));
    const EulerPose seen = received.pose.toPose();
    if (received.type == MessageType::Source) {
      auto admitted = decoder.addSource(FacePatch{}, Landmarks{}, seen);
      if (!admitted) {
        check.digestsAgree = false;
        return check;
      }
      decoder = std::move(admitted->pool);
    } else if (std::holds_alternative<NeedNewSource>(decoder.classify(seen))) {
      check.classifyConsistent = false;
    }

    if (encoder.digest() != decoder.digest()) check.digestsAgree = false;
    for (std::size_t a = 0; a < encoder.size(); ++a) {
      for (std::size_t b = a + 1; b < encoder.size(); ++b) {
        if (angularDistance(encoder.entry(a).point, encoder.entry(b).point) < threshold)
          check.spacingHolds = false;
      }
      if (a > 0 && encoder.entry(a).sourceId <= encoder.entry(a - 1).sourceId) check.idsIncrease = false;
    }
  }
  return check;
}

} // namespace faiv::testing
