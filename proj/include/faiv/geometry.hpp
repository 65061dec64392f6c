#pragma once

// Head-pose geometry over the (yaw, pitch) plane: projection, distance,
// thinning, Delaunay triangulation, point location and barycentric weights.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace faiv {

/// Head orientation in degrees.
struct EulerPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  bool operator==(const EulerPose&) const = default;
};

/// Roll-free projection of an EulerPose.
struct AngularPoint {
  double yaw = 0.0;
  double pitch = 0.0;

  bool operator==(const AngularPoint&) const = default;
};

using VertexId = int64_t;

struct MeshVertex {
  VertexId id;
  AngularPoint point;
};

/// Vertex ids of a counter-clockwise triangle.
using Triangle = std::array<VertexId, 3>;

namespace tolerance {
inline constexpr double kArea = 1e-9;       // deg^2
inline constexpr double kCircle = 1e-9;     // relative to circumradius
inline constexpr double kDegeneracy = 1e-6; // deg
inline constexpr double kWeight = 1e-9;
} // namespace tolerance

class TriMesh {
public:
  TriMesh() = default;

  const std::vector<MeshVertex>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }

  /// Throws EmptyMesh/InvalidArgument for unknown ids.
  const AngularPoint& point(VertexId id) const;
  std::array<AngularPoint, 3> corners(std::size_t triangleIndex) const;

private:
  friend TriMesh delaunay(std::span<const MeshVertex> points);
  std::vector<MeshVertex> vertices_;
  std::vector<Triangle> triangles_;
};

struct BarycentricWeights {
  std::array<double, 3> weights{};
};

struct Interior {
  std::size_t triangle;
};

struct Outside {
  VertexId nearest;
  double distance;
};

using Location = std::variant<Interior, Outside>;

void validatePose(const EulerPose& pose);

AngularPoint projectPose(const EulerPose& pose);

/// Pose angles are exchanged at 0.01 degree resolution.
int16_t toCentidegrees(double degrees);
double fromCentidegrees(int16_t centidegrees);
EulerPose quantizePose(const EulerPose& pose);

double angularDistance(const AngularPoint& a, const AngularPoint& b);

/// Greedy scan in input order; returns indices of the kept points.
std::vector<std::size_t> thinPoints(std::span<const AngularPoint> points, double threshold);

/// Delaunay triangulation over (yaw, pitch). Fewer than three points or an
/// all-collinear set yields zero triangles.
TriMesh delaunay(std::span<const MeshVertex> points);

Location locate(const TriMesh& mesh, const AngularPoint& p);

BarycentricWeights barycentric(const std::array<AngularPoint, 3>& triangle, const AngularPoint& p);

// Primitive predicates shared with the tests' brute-force checks.

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
double orient2d(const AngularPoint& a, const AngularPoint& b, const AngularPoint& c);

/// True when p lies strictly inside the circumcircle of (a, b, c), beyond
/// kCircle relative tolerance.
bool inCircumcircle(const AngularPoint& a, const AngularPoint& b, const AngularPoint& c,
                    const AngularPoint& p);

} // namespace faiv
