#pragma once

// Deterministic procedural avatar and the vision components that invert it.
//
// The avatar is a skin-coloured head ellipse on a flat background carrying 16
// dark fiducial discs arranged in four rows of four. Disc centres are the
// weak-perspective projection of fixed 3D points on the face plane, so the
// disc centroids are the landmarks and also determine the head pose.

#include "faiv/kv_config.hpp"
#include "faiv/vision.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace faiv {

inline constexpr std::size_t kSyntheticLandmarkCount = 16;
inline constexpr double kMaxRenderAngle = 75.0;

using Rgb = std::array<uint8_t, 3>;

struct AvatarParams {
  uint64_t identitySeed = 0;
  Rgb skin{224, 172, 140};
  Rgb eye{40, 30, 60};
  Rgb mouth{110, 20, 30};
  Rgb background{200, 200, 200};
  double axisA = 77.0; // horizontal semi-axis, pixels
  double axisB = 97.0; // vertical semi-axis, pixels
  double fiducialRadius = 3.85;
  double offsetX = 0.0; // head centre relative to the frame centre
  double offsetY = 0.0;

  /// Throws InvalidArgument when axes/radius are non-positive or the discs
  /// can overlap for some yaw/pitch in [-60, 60].
  void validate() const;

  KeyValueConfig toConfig() const;
  static AvatarParams fromConfig(const KeyValueConfig& cfg);
};

/// Defaults scaled to a square frame of `size` pixels; the seed perturbs
/// the palette slightly.
AvatarParams defaultAvatarParams(int size, uint64_t identitySeed = 0);

/// Canonical face-plane coordinates (x, y in units of the semi-axes) of the
/// 16 fiducials, row-major top to bottom, left to right.
const std::array<Point2, kSyntheticLandmarkCount>& fiducialLayout();

/// Depth of the face plane in front of the head centre, in units of axisA.
inline constexpr double kFaceDepth = 0.25;

/// Landmark positions of the avatar for a pose, in frame coordinates of a
/// width x height frame.
Landmarks projectFiducials(const EulerPose& pose, const AvatarParams& params, int width,
                           int height);

struct RenderedAvatar {
  Frame frame;
  Landmarks landmarks;
  BBox box;
  Mask mask; // frame-sized head coverage
};

/// Throws OutOfRange when |yaw| or |pitch| exceeds 75 degrees.
RenderedAvatar renderAvatar(const EulerPose& pose, const AvatarParams& params, int width,
                            int height);

/// Head ellipse recovered from image moments.
struct EllipseFit {
  double cx = 0.0, cy = 0.0;
  double semiMajor = 0.0, semiMinor = 0.0;
  double angle = 0.0; // radians, direction of the major axis
  double mass = 0.0;  // face area in pixels
};

class SyntheticFaceDetector final : public FaceDetector {
public:
  explicit SyntheticFaceDetector(AvatarParams params) : params_(std::move(params)) {}
  BBox detect(const Image& frame) const override;

private:
  AvatarParams params_;
};

class SyntheticSegmenter final : public FaceSegmenter {
public:
  explicit SyntheticSegmenter(AvatarParams params) : params_(std::move(params)) {}
  Mask segment(const Image& frame, const BBox& box) const override;
  /// nullopt when the region holds no face.
  std::optional<EllipseFit> fitEllipse(const Image& frame, const BBox& box) const;

private:
  AvatarParams params_;
};

class SyntheticLandmarkDetector final : public LandmarkDetector {
public:
  explicit SyntheticLandmarkDetector(AvatarParams params) : params_(std::move(params)) {}
  std::size_t landmarkCount() const override { return kSyntheticLandmarkCount; }
  Landmarks detect(const BBox& box, const Image& frame) const override;

private:
  AvatarParams params_;
};

class SyntheticPoseEstimator final : public PoseEstimator {
public:
  explicit SyntheticPoseEstimator(AvatarParams params);
  EulerPose estimate(const Image& frame, const BBox& box) const override;
  /// Pose from landmarks and the head centre.
  EulerPose solve(const Landmarks& landmarks, double centerX, double centerY) const;

private:
  AvatarParams params_;
  SyntheticSegmenter segmenter_;
  SyntheticLandmarkDetector landmarks_;
};

/// Least-squares affine map from the source landmarks to the driving
/// landmarks, applied to the stored face crop with bilinear sampling.
class AffineReenactor final : public Reenactor {
public:
  FacePatch reenact(const SourceEntry& source, const Landmarks& driveLandmarks,
                    const BBox& driveBox) const override;
};

BackendSuite makeSyntheticBackend(const AvatarParams& params);

/// Backend by configuration name; "synthetic" is the only built-in.
BackendSuite makeBackend(std::string_view name, const AvatarParams& params);

} // namespace faiv
