#include "faiv/geometry.hpp"

#include "faiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>
#include <utility>

namespace faiv {

namespace {

bool finite(double v) { return std::isfinite(v); }

void validatePoint(const AngularPoint& p) {
  if (!finite(p.yaw) || !finite(p.pitch)) {
    throw Error(ErrorCode::InvalidPose, "angular point has non-finite coordinates");
  }
}

// Twice the minimum triangle area accepted as non-degenerate.
constexpr double kMinOrient = 2.0 * tolerance::kArea;

} // namespace

void validatePose(const EulerPose& pose) {
  for (double v : {pose.yaw, pose.pitch, pose.roll}) {
    if (!finite(v)) {
      throw Error(ErrorCode::InvalidPose, "pose has non-finite angle");
    }
    if (v < -180.0 || v > 180.0) {
      throw Error(ErrorCode::InvalidPose, "pose angle outside [-180, 180]");
    }
  }
}

AngularPoint projectPose(const EulerPose& pose) {
  validatePose(pose);
  return {pose.yaw, pose.pitch};
}

int16_t toCentidegrees(double degrees) {
  if (!finite(degrees) || degrees < -180.0 || degrees > 180.0) {
    throw Error(ErrorCode::InvalidPose, "angle cannot be quantized");
  }
  return static_cast<int16_t>(std::lround(degrees * 100.0));
}

double fromCentidegrees(int16_t centidegrees) { return centidegrees / 100.0; }

EulerPose quantizePose(const EulerPose& pose) {
  return {fromCentidegrees(toCentidegrees(pose.yaw)), fromCentidegrees(toCentidegrees(pose.pitch)),
          fromCentidegrees(toCentidegrees(pose.roll))};
}

double angularDistance(const AngularPoint& a, const AngularPoint& b) {
  validatePoint(a);
  validatePoint(b);
  return std::hypot(a.yaw - b.yaw, a.pitch - b.pitch);
}

std::vector<std::size_t> thinPoints(std::span<const AngularPoint> points, double threshold) {
  if (!(threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "thinning threshold must be positive");
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool farEnough = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return angularDistance(points[i], points[k]) >= threshold;
    });
    if (farEnough) {
      kept.push_back(i);
    }
  }
  return kept;
}

double orient2d(const AngularPoint& a, const AngularPoint& b, const AngularPoint& c) {
  return (b.yaw - a.yaw) * (c.pitch - a.pitch) - (b.pitch - a.pitch) * (c.yaw - a.yaw);
}

bool inCircumcircle(const AngularPoint& a, const AngularPoint& b, const AngularPoint& c,
                    const AngularPoint& p) {
  // Circumcenter relative to a.
  const double bx = b.yaw - a.yaw, by = b.pitch - a.pitch;
  const double cx = c.yaw - a.yaw, cy = c.pitch - a.pitch;
  const double d = 2.0 * (bx * cy - by * cx);
  if (std::abs(d) <= 2.0 * kMinOrient) {
    return false;
  }
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  const double radius = std::hypot(ux, uy);
  const double dist = std::hypot(p.yaw - a.yaw - ux, p.pitch - a.pitch - uy);
  return radius - dist > tolerance::kCircle * std::max(1.0, radius);
}

const AngularPoint& TriMesh::point(VertexId id) const {
  for (const auto& v : vertices_) {
    if (v.id == id) {
      return v.point;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown vertex id " + std::to_string(id));
}

std::array<AngularPoint, 3> TriMesh::corners(std::size_t triangleIndex) const {
  const Triangle& t = triangles_.at(triangleIndex);
  return {point(t[0]), point(t[1]), point(t[2])};
}

namespace {

using LocalTri = std::array<std::size_t, 3>;

// Sweep triangulation: points are inserted in lexicographic order, so each
// new point is a vertex of the new hull and strictly outside the old one.
std::vector<LocalTri> sweepTriangulate(const std::vector<AngularPoint>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (pts[i].yaw != pts[j].yaw) {
      return pts[i].yaw < pts[j].yaw;
    }
    return pts[i].pitch < pts[j].pitch;
  });

  // Leading collinear chain.
  std::size_t k = 2;
  while (k < n && std::abs(orient2d(pts[order[0]], pts[order[1]], pts[order[k]])) <= kMinOrient) {
    ++k;
  }
  if (k == n) {
    return {};
  }

  std::vector<LocalTri> tris;
  const std::size_t apex = order[k];
  const bool apexLeft = orient2d(pts[order[0]], pts[order[k - 1]], pts[apex]) > 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    std::size_t a = order[i], b = order[i + 1];
    if (!apexLeft) {
      std::swap(a, b);
    }
    tris.push_back({a, b, apex});
  }

  // Counter-clockwise hull.
  std::vector<std::size_t> hull;
  if (apexLeft) {
    for (std::size_t i = 0; i < k; ++i) hull.push_back(order[i]);
  } else {
    for (std::size_t i = k; i-- > 0;) hull.push_back(order[i]);
  }
  hull.push_back(apex);

  for (std::size_t idx = k + 1; idx < n; ++idx) {
    const std::size_t q = order[idx];
    const std::size_t m = hull.size();
    std::vector<char> visible(m, 0);
    bool any = false;
    for (std::size_t i = 0; i < m; ++i) {
      const double o = orient2d(pts[hull[i]], pts[hull[(i + 1) % m]], pts[q]);
      if (o < -kMinOrient) {
        visible[i] = 1;
        any = true;
      }
    }
    if (!any) {
      // Numerically on the hull line; leave it as an isolated vertex.
      continue;
    }
    std::size_t start = 0;
    while (!(visible[start] && !visible[(start + m - 1) % m])) {
      ++start;
    }
    std::size_t end = start;
    while (visible[(end + 1) % m]) {
      end = (end + 1) % m;
    }
    for (std::size_t i = start;; i = (i + 1) % m) {
      tris.push_back({hull[(i + 1) % m], hull[i], q});
      if (i == end) break;
    }
    std::vector<std::size_t> next;
    next.push_back(hull[start]);
    next.push_back(q);
    for (std::size_t i = (end + 1) % m; i != start; i = (i + 1) % m) {
      next.push_back(hull[i]);
    }
    hull = std::move(next);
  }
  return tris;
}

// Lawson edge flipping until every interior edge is locally Delaunay.
void flipToDelaunay(const std::vector<AngularPoint>& pts, std::vector<LocalTri>& tris) {
  const std::size_t maxPasses = 8 * (pts.size() * pts.size() + 4);
  for (std::size_t pass = 0; pass < maxPasses; ++pass) {
    // directed edge (a, b) -> (triangle, local index of opposite vertex)
    std::map<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, int>> edges;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int e = 0; e < 3; ++e) {
        edges[{tris[t][e], tris[t][(e + 1) % 3]}] = {t, (e + 2) % 3};
      }
    }
    std::vector<char> touched(tris.size(), 0);
    bool flipped = false;
    for (const auto& [edge, owner] : edges) {
      const auto [a, b] = edge;
      if (a > b) continue;
      auto twin = edges.find({b, a});
      if (twin == edges.end()) continue;
      const std::size_t t1 = owner.first, t2 = twin->second.first;
      if (touched[t1] || touched[t2]) continue;
      const std::size_t c = tris[t1][owner.second];
      const std::size_t d = tris[t2][twin->second.second];
      if (!inCircumcircle(pts[a], pts[b], pts[c], pts[d])) continue;
      if (orient2d(pts[a], pts[d], pts[c]) <= kMinOrient ||
          orient2d(pts[d], pts[b], pts[c]) <= kMinOrient) {
        continue;
      }
      tris[t1] = {a, d, c};
      tris[t2] = {d, b, c};
      touched[t1] = touched[t2] = 1;
      flipped = true;
    }
    if (!flipped) return;
  }
}

} // namespace

TriMesh delaunay(std::span<const MeshVertex> points) {
  TriMesh mesh;
  std::unordered_set<VertexId> ids;
  for (const auto& v : points) {
    validatePoint(v.point);
    if (!ids.insert(v.id).second) {
      throw Error(ErrorCode::DuplicateVertex, "duplicate vertex id " + std::to_string(v.id));
    }
  }
  mesh.vertices_.assign(points.begin(), points.end());
  if (points.size() < 3) {
    return mesh;
  }
  std::vector<AngularPoint> pts;
  pts.reserve(points.size());
  for (const auto& v : points) pts.push_back(v.point);

  auto tris = sweepTriangulate(pts);
  flipToDelaunay(pts, tris);

  // Canonical order: rotate each triangle so its smallest id leads, then sort.
  for (const auto& t : tris) {
    Triangle tri{points[t[0]].id, points[t[1]].id, points[t[2]].id};
    auto lowest = std::min_element(tri.begin(), tri.end());
    std::rotate(tri.begin(), lowest, tri.end());
    mesh.triangles_.push_back(tri);
  }
  std::sort(mesh.triangles_.begin(), mesh.triangles_.end());
  return mesh;
}

namespace {

std::array<double, 3> rawWeights(const std::array<AngularPoint, 3>& t, const AngularPoint& p,
                                 double area) {
  return {orient2d(t[1], t[2], p) / area, orient2d(t[2], t[0], p) / area,
          orient2d(t[0], t[1], p) / area};
}

} // namespace

Location locate(const TriMesh& mesh, const AngularPoint& p) {
  validatePoint(p);
  if (mesh.vertices().empty()) {
    throw Error(ErrorCode::EmptyMesh, "cannot locate a point in an empty mesh");
  }
  for (std::size_t i = 0; i < mesh.triangles().size(); ++i) {
    const auto corners = mesh.corners(i);
    const double area = orient2d(corners[0], corners[1], corners[2]);
    const auto w = rawWeights(corners, p, area);
    if (w[0] >= -tolerance::kWeight && w[1] >= -tolerance::kWeight &&
        w[2] >= -tolerance::kWeight) {
      return Interior{i};
    }
  }
  Outside best{0, std::numeric_limits<double>::infinity()};
  for (const auto& v : mesh.vertices()) {
    const double d = angularDistance(v.point, p);
    if (d < best.distance || (d == best.distance && v.id < best.nearest)) {
      best = {v.id, d};
    }
  }
  return best;
}

BarycentricWeights barycentric(const std::array<AngularPoint, 3>& triangle, const AngularPoint& p) {
  validatePoint(p);
  for (const auto& c : triangle) validatePoint(c);
  const double area = orient2d(triangle[0], triangle[1], triangle[2]);
  if (std::abs(area) <= kMinOrient) {
    throw Error(ErrorCode::DegenerateTriangle, "triangle area below tolerance");
  }
  auto w = rawWeights(triangle, p, area);
  double sum = 0.0;
  for (double& x : w) {
    x = std::clamp(x, 0.0, 1.0);
    sum += x;
  }
  BarycentricWeights out;
  for (int i = 0; i < 3; ++i) out.weights[i] = w[i] / sum;
  return out;
}

} // namespace faiv
