#include "faiv/blur.hpp"
#include "faiv/error.hpp"
#include "faiv/metrics.hpp"
#include "faiv/synthetic_backend.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace faiv;
using faiv::testing::maxLandmarkError;

namespace {

constexpr int kSize = 256;

struct Backend : ::testing::Test {
  AvatarParams params = defaultAvatarParams(kSize);
  BackendSuite suite = makeSyntheticBackend(params);

  RenderedAvatar render(const EulerPose& pose) const { return renderAvatar(pose, params, kSize, kSize); }
};

int64_t errorDetail(ErrorCode expected, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), expected);
    return e.detail();
  }
  ADD_FAILURE() << "no error raised";
  return -1;
}

} // namespace

TEST_F(Backend, RenderIsDeterministic) {
  const auto a = render({12, -7, 3});
  const auto b = render({12, -7, 3});
  EXPECT_EQ(a.frame, b.frame);
  EXPECT_EQ(a.landmarks, b.landmarks);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.landmarks.size(), kSyntheticLandmarkCount);
}

TEST_F(Backend, RenderRejectsExtremePoses) {
  errorDetail(ErrorCode::OutOfRange, [&] { render({76, 0, 0}); });
  errorDetail(ErrorCode::OutOfRange, [&] { render({0, -80, 0}); });
}

TEST_F(Backend, CanonicalPoseIsSymmetric) {
  const auto a = render({0, 0, 0});
  const double cx = kSize / 2.0 + params.offsetX;
  // Grid rows hold four landmarks mirrored pairwise about the centre.
  for (int row = 0; row < 4; ++row) {
    for (int k = 0; k < 2; ++k) {
      const Point2& l = a.landmarks.points[row * 4 + k];
      const Point2& r = a.landmarks.points[row * 4 + 3 - k];
      EXPECT_NEAR(l.x + r.x, 2 * cx, 1.0);
      EXPECT_NEAR(l.y, r.y, 0.5);
    }
  }
}

TEST_F(Backend, YawMirrorsLandmarks) {
  const auto left = render({-30, 0, 0});
  const auto right = render({30, 0, 0});
  const double cx = kSize / 2.0 + params.offsetX;
  for (int row = 0; row < 4; ++row) {
    for (int k = 0; k < 4; ++k) {
      const Point2& l = left.landmarks.points[row * 4 + k];
      const Point2& r = right.landmarks.points[row * 4 + 3 - k];
      EXPECT_NEAR(l.x - cx, cx - r.x, 0.5);
      EXPECT_NEAR(l.y, r.y, 0.5);
    }
  }
}

TEST_F(Backend, DetectMatchesRenderedExtent) {
  const auto a = render({0, 0, 0});
  EXPECT_EQ(suite.detector->detect(a.frame), a.box);
  AvatarParams moved = params;
  moved.offsetX += 20;
  const auto b = renderAvatar({0, 0, 0}, moved, kSize, kSize);
  EXPECT_EQ(suite.detector->detect(b.frame), a.box.translated(20, 0));
  errorDetail(ErrorCode::NoFace, [&] { suite.detector->detect(Frame(kSize, kSize, params.background)); });
}

TEST_F(Backend, PoseEstimatesWithinHalfDegree) {
  for (const EulerPose& pose : {EulerPose{20, -10, 5}, EulerPose{0, 0, 0}, EulerPose{-35, 25, -8}}) {
    const auto a = render(pose);
    const EulerPose est = suite.poseEstimator->estimate(a.frame, a.box);
    EXPECT_NEAR(est.yaw, pose.yaw, 0.5);
    EXPECT_NEAR(est.pitch, pose.pitch, 0.5);
    EXPECT_NEAR(est.roll, pose.roll, 0.5);
    const Image blurred = gaussianBlurMasked(a.frame, a.mask, 4.0);
    const EulerPose estBlur = suite.poseEstimator->estimate(blurred, a.box);
    EXPECT_NEAR(est.yaw, estBlur.yaw, 1.0);
    EXPECT_NEAR(est.pitch, estBlur.pitch, 1.0);
    EXPECT_NEAR(est.roll, estBlur.roll, 1.0);
  }
}

TEST_F(Backend, SegmentAreaAndLocality) {
  const auto a = render({0, 0, 0});
  const Mask m = suite.segmenter->segment(a.frame, a.box);
  const double analytic = std::numbers::pi * params.axisA * params.axisB;
  EXPECT_NEAR(m.area(), analytic, 0.02 * analytic);
  const BBox grown = a.box.inflated(0.1);
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      const bool inside = x >= grown.x && x < grown.x + grown.w && y >= grown.y && y < grown.y + grown.h;
      if (!inside) {
        ASSERT_EQ(m.at(x, y), 0) << x << "," << y;
      }
    }
  }
  const Mask blank = suite.segmenter->segment(Frame(kSize, kSize, params.background), a.box);
  EXPECT_EQ(blank.area(), 0.0);
}

TEST_F(Backend, LandmarksNearGroundTruth) {
  const auto a = render({15, 10, -4});
  EXPECT_LE(maxLandmarkError(suite.landmarkDetector->detect(a.box, a.frame), a.landmarks), 0.5);
  const Image blurred = gaussianBlurMasked(a.frame, a.mask, 4.0);
  EXPECT_LE(maxLandmarkError(suite.landmarkDetector->detect(a.box, blurred), a.landmarks), 1.0);
  const int64_t found = errorDetail(ErrorCode::LandmarkFailure, [&] {
    suite.landmarkDetector->detect(a.box, Frame(kSize, kSize, params.background));
  });
  EXPECT_EQ(found, 0);
}

TEST_F(Backend, RoundTripOverRandomPoses) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-45, 45), r(-10, 10);
  for (int i = 0; i < 30; ++i) {
    const EulerPose pose{d(rng), d(rng), r(rng)};
    const auto a = render(pose);
    const BBox box = suite.detector->detect(a.frame);
    const EulerPose est = suite.poseEstimator->estimate(a.frame, box);
    EXPECT_NEAR(est.yaw, pose.yaw, 0.5);
    EXPECT_NEAR(est.pitch, pose.pitch, 0.5);
    EXPECT_LE(maxLandmarkError(suite.landmarkDetector->detect(box, a.frame), a.landmarks), 1.0);
  }
}

TEST_F(Backend, ReenactIdentityAndTranslation) {
  const auto a = render({10, 5, 0});
  SourceEntry src;
  src.sourceId = 3;
  src.faceCrop = {a.box, crop(a.frame, a.box), crop(a.mask, a.box)};
  src.landmarks = a.landmarks;
  const AffineReenactor reenactor;

  const FacePatch same = reenactor.reenact(src, a.landmarks, a.box);
  EXPECT_GE(psnr(same.pixels, src.faceCrop.pixels), 50.0);

  Landmarks shifted = a.landmarks;
  for (Point2& p : shifted.points) p.x += 5;
  const FacePatch moved = reenactor.reenact(src, shifted, a.box);
  // Oracle: the crop content shifted right by 5 px; compare away from the
  // border columns that enter from outside the crop.
  const BBox inner{5, 0, a.box.w - 10, a.box.h};
  Image oracle(inner.w, inner.h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < inner.h; ++y)
      for (int x = 0; x < inner.w; ++x) oracle.at(c, x, y) = src.faceCrop.pixels.at(c, x, y);
  EXPECT_GE(psnr(crop(moved.pixels, inner), oracle), 40.0);

  Landmarks collapsed = a.landmarks;
  for (Point2& p : collapsed.points) p = {50, 50};
  EXPECT_EQ(errorDetail(ErrorCode::ReenactFailure, [&] { reenactor.reenact(src, collapsed, a.box); }), 3);
}

TEST_F(Backend, AvatarParamsRoundTripAndValidation) {
  const AvatarParams p = defaultAvatarParams(400, 17);
  const AvatarParams back = AvatarParams::fromConfig(KeyValueConfig::parse(p.toConfig().serialize()));
  EXPECT_EQ(back.toConfig().values(), p.toConfig().values());
  AvatarParams bad = p;
  bad.fiducialRadius = 40;
  EXPECT_THROW(bad.validate(), Error);
  bad = p;
  bad.axisA = -1;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(makeBackend("neural", p), Error);
}
