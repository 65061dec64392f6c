#pragma once

// Contracts for the learned components of the pipeline and the reference
// compositor. Implementations must be stateless after construction.

#include "faiv/geometry.hpp"
#include "faiv/image.hpp"
#include "faiv/landmarks.hpp"
#include "faiv/source_pool.hpp"

#include <memory>
#include <string>

namespace faiv {

class FaceDetector {
public:
  virtual ~FaceDetector() = default;
  /// Tightest box around the face; throws NoFace.
  virtual BBox detect(const Image& frame) const = 0;
};

class PoseEstimator {
public:
  virtual ~PoseEstimator() = default;
  virtual EulerPose estimate(const Image& frame, const BBox& box) const = 0;
};

class FaceSegmenter {
public:
  virtual ~FaceSegmenter() = default;
  /// Frame-sized coverage mask, zero outside the box inflated by 10%.
  virtual Mask segment(const Image& frame, const BBox& box) const = 0;
};

/// G_l: landmarks from a (possibly blurred) frame and its face box.
class LandmarkDetector {
public:
  virtual ~LandmarkDetector() = default;
  virtual std::size_t landmarkCount() const = 0;
  /// Throws LandmarkFailure with the number of landmarks found.
  virtual Landmarks detect(const BBox& box, const Image& frame) const = 0;
};

/// G_r: the source face re-posed to follow `driveLandmarks`, produced at the
/// driving box dimensions.
class Reenactor {
public:
  virtual ~Reenactor() = default;
  virtual FacePatch reenact(const SourceEntry& source, const Landmarks& driveLandmarks,
                            const BBox& driveBox) const = 0;
};

struct BackendSuite {
  std::string name;
  std::string version;
  std::shared_ptr<const FaceDetector> detector;
  std::shared_ptr<const PoseEstimator> poseEstimator;
  std::shared_ptr<const FaceSegmenter> segmenter;
  std::shared_ptr<const LandmarkDetector> landmarkDetector;
  std::shared_ptr<const Reenactor> reenactor;
};

inline constexpr int kFeatherWidth = 4;

/// Replaces the box region of `frame` by the patch, weighted by the patch
/// mask and a ramp that rises over the outer kFeatherWidth pixels of the
/// box. Pixels outside the box are never touched.
Frame composite(const FacePatch& face, const Frame& frame, const BBox& box);

/// Ramp factor of the composite feather at box-local pixel (x, y).
double featherWeight(int x, int y, int width, int height);

} // namespace faiv
