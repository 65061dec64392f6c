#include "faiv/error.hpp"
#include "faiv/metrics.hpp"
#include "faiv/session.hpp"
#include "faiv/synthetic_backend.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace faiv;

namespace {

struct Session : ::testing::Test {
  static constexpr int kSize = 256;
  AvatarParams params = defaultAvatarParams(kSize);
  BackendSuite backend = makeSyntheticBackend(params);
  std::shared_ptr<const BaseCodec> codec = std::make_shared<ReferenceCodec>();
  SessionConfig config = [] {
    SessionConfig c;
    c.width = kSize;
    c.height = kSize;
    // The lowest tiers downsample 8x, too coarse for fiducials at this size.
    c.drivingQuality = 5;
    return c;
  }();

  Frame render(const EulerPose& pose) const { return renderAvatar(pose, params, kSize, kSize).frame; }
};

} // namespace

TEST_F(Session, ConfigValidation) {
  SessionConfig bad = config;
  bad.drivingQuality = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = config;
  bad.threshold = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = config;
  bad.blurSigma = -1;
  EXPECT_THROW(bad.validate(), Error);
  bad = config;
  bad.width = 8;
  EXPECT_THROW(bad.validate(), Error);
  SessionConfig other = config;
  other.drivingQuality = 3;
  EXPECT_NE(config.digest(), other.digest());
}

TEST_F(Session, FirstFrameIsSourceThenDriving) {
  Encoder enc(config, backend, codec);
  const WireMessage first = enc.encode(render({0, 0, 0}));
  const WireMessage second = enc.encode(render({0, 0, 0}));
  EXPECT_EQ(first.type, MessageType::Source);
  EXPECT_EQ(second.type, MessageType::Driving);
  EXPECT_EQ(first.frameIndex, 0u);
  EXPECT_EQ(second.frameIndex, 1u);
  EXPECT_EQ(enc.state().pool.size(), 1u);
  EXPECT_EQ(enc.state().stats.totalBytes(), first.serializedSize() + second.serializedSize());
}

TEST_F(Session, SweepMatchesReplayOracleAndReplicasStayInSync) {
  Encoder enc(config, backend, codec);
  Decoder dec(config, backend, codec);
  std::vector<EulerPose> sent;
  std::vector<bool> isSource;
  uint64_t bytes = 0;
  for (int yaw = 0; yaw <= 60; yaw += 5) {
    const WireMessage msg = enc.encode(render({double(yaw), 0, 0}));
    const WireMessage received = deserialize(serialize(msg));
    sent.push_back(received.pose.toPose());
    isSource.push_back(received.type == MessageType::Source);
    bytes += serialize(msg).size();
    const DecoderStepResult out = dec.decode(received);
    ASSERT_EQ(enc.state().pool.digest(), dec.state().pool.digest()) << "yaw " << yaw;
    if (received.type == MessageType::Driving && yaw <= 45) {
      EXPECT_EQ(out.outcome, DecodeOutcome::Reenacted) << "yaw " << yaw;
    }
  }
  EXPECT_EQ(isSource, faiv::testing::replaySourceDecisions(sent, config.threshold));
  EXPECT_TRUE(isSource.front());
  EXPECT_GE(std::count(isSource.begin(), isSource.end(), true), 4);
  EXPECT_EQ(enc.state().stats, dec.state().stats);
  EXPECT_EQ(enc.state().stats.totalBytes(), bytes);
  EXPECT_EQ(enc.state().stats.headerBytes, isSource.size() * kMessageHeaderBytes);
}

TEST_F(Session, DrivingAtSourcePoseReproducesStoredFace) {
  Encoder enc(config, backend, codec);
  Decoder dec(config, backend, codec);
  const RenderedAvatar a = renderAvatar({8, -4, 0}, params, kSize, kSize);
  dec.decode(enc.encode(a.frame));
  const WireMessage driving = enc.encode(a.frame);
  ASSERT_EQ(driving.type, MessageType::Driving);
  const DecoderStepResult out = dec.decode(driving);
  ASSERT_EQ(out.outcome, DecodeOutcome::Reenacted);
  const SourceEntry& stored = dec.state().pool.entry(0);
  const BBox box = driving.box.toBBox();
  ASSERT_EQ(box, stored.faceCrop.box);
  const BBox inner{box.x + kFeatherWidth, box.y + kFeatherWidth, box.w - 2 * kFeatherWidth,
                   box.h - 2 * kFeatherWidth};
  const double reenacted = psnr(crop(out.output, inner), crop(stored.faceCrop.pixels, inner.translated(-box.x, -box.y)));
  const double baseOnly = psnr(crop(out.decoded, inner), crop(stored.faceCrop.pixels, inner.translated(-box.x, -box.y)));
  EXPECT_GT(reenacted, baseOnly);
  EXPECT_GE(reenacted, 30.0);
}

TEST_F(Session, CorruptPayloadLeavesStateUnchanged) {
  Encoder enc(config, backend, codec);
  Decoder dec(config, backend, codec);
  dec.decode(enc.encode(render({0, 0, 0})));
  WireMessage msg = enc.encode(render({2, 0, 0}));
  const SessionState before = dec.state();
  WireMessage corrupt = msg;
  corrupt.payload.resize(corrupt.payload.size() / 2);
  try {
    dec.decode(corrupt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CodecError);
  }
  EXPECT_EQ(dec.state().nextFrameIndex, before.nextFrameIndex);
  EXPECT_EQ(dec.state().stats, before.stats);
  EXPECT_EQ(dec.state().pool.digest(), before.pool.digest());
  // The intact message still decodes afterwards.
  EXPECT_NO_THROW(dec.decode(msg));
}

TEST_F(Session, OutOfOrderAndUnservablePosesAreDesyncs) {
  Encoder enc(config, backend, codec);
  Decoder dec(config, backend, codec);
  WireMessage first = enc.encode(render({0, 0, 0}));
  WireMessage skipped = first;
  skipped.frameIndex = 5;
  try {
    dec.decode(skipped);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProtocolDesync);
  }
  dec.decode(first);
  WireMessage far = enc.encode(render({0, 0, 0}));
  far.pose = QuantizedPose::from({40, 0, 0});
  try {
    dec.decode(far);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProtocolDesync);
  }
  EXPECT_EQ(dec.state().nextFrameIndex, 1u);
}

TEST_F(Session, NoFaceFramesUseTheSentinelBox) {
  Encoder enc(config, backend, codec);
  Decoder dec(config, backend, codec);
  const Frame empty(kSize, kSize, params.background);
  const WireMessage msg = enc.encode(empty);
  EXPECT_EQ(msg.type, MessageType::Driving);
  EXPECT_TRUE(msg.box.isNoFace());
  const DecoderStepResult out = dec.decode(msg);
  EXPECT_EQ(out.outcome, DecodeOutcome::NoFace);
  EXPECT_EQ(out.output, out.decoded);
  EXPECT_TRUE(enc.state().pool.empty());
}

TEST_F(Session, WrongFrameSizeIsRejected) {
  Encoder enc(config, backend, codec);
  EXPECT_THROW(enc.encode(Frame(64, 64, 0)), Error);
  EXPECT_EQ(enc.state().nextFrameIndex, 0u);
}

TEST_F(Session, StepsAreDeterministic) {
  auto run = [&] {
    Encoder enc(config, backend, codec);
    Decoder dec(config, backend, codec);
    std::vector<uint8_t> bytes;
    std::vector<Frame> outputs;
    for (double yaw : {0.0, 4.0, 9.0, 15.0, 21.0, 12.0}) {
      const WireMessage msg = enc.encode(render({yaw, yaw / 3, 0}));
      serializeInto(msg, bytes);
      outputs.push_back(dec.decode(msg).output);
    }
    return std::make_pair(bytes, outputs);
  };
  EXPECT_EQ(run(), run());
}

TEST_F(Session, PureStepsDoNotMutateInput) {
  const SessionState s0 = SessionState::initial(config);
  const EncoderStepResult r = encoderStep(s0, render({0, 0, 0}), backend, *codec);
  EXPECT_EQ(s0.nextFrameIndex, 0u);
  EXPECT_TRUE(s0.pool.empty());
  EXPECT_EQ(r.state.nextFrameIndex, 1u);
  const DecoderStepResult d = decoderStep(s0, r.message, backend, *codec);
  EXPECT_EQ(d.state.pool.digest(), r.state.pool.digest());
  EXPECT_TRUE(s0.pool.empty());
}

TEST_F(Session, UnmeasurablePoseIsSentAsFaceless) {
  // Paint over the fiducials: the head is still detected but has no pose.
  const RenderedAvatar a = renderAvatar({0, 0, 0}, params, kSize, kSize);
  Frame frame = a.frame;
  const double r = 2.5 * params.fiducialRadius;
  for (const Point2& p : a.landmarks.points) {
    for (int y = int(p.y - r); y <= int(p.y + r); ++y) {
      for (int x = int(p.x - r); x <= int(p.x + r); ++x) {
        for (int c = 0; c < 3; ++c) frame.at(c, x, y) = params.skin[c];
      }
    }
  }
  ASSERT_NO_THROW(backend.detector->detect(frame));
  Encoder enc(config, backend, codec);
  const WireMessage msg = enc.encode(frame);
  EXPECT_EQ(msg.type, MessageType::Driving);
  EXPECT_TRUE(msg.box.isNoFace());
  EXPECT_TRUE(enc.state().pool.empty());
}
