#pragma once

#include <vector>

namespace faiv {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

/// Ordered facial landmarks in frame coordinates. Count and ordering are
/// fixed per vision backend.
struct Landmarks {
  std::vector<Point2> points;

  std::size_t size() const noexcept { return points.size(); }
  bool operator==(const Landmarks&) const = default;
};

} // namespace faiv
