#include "faiv/session.hpp"

#include "faiv/blur.hpp"
#include "faiv/error.hpp"
#include "faiv/interpolation.hpp"

#include <bit>
#include <cmath>

namespace faiv {

namespace {

constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

void mix(uint64_t& h, uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
}

} // namespace

void SessionConfig::validate() const {
  try {
    Frame::checkDimensions(width, height);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (!std::isfinite(threshold) || threshold <= 0.0) {
    throw Error(ErrorCode::ConfigError, "threshold must be positive");
  }
  for (int q : {sourceQuality, drivingQuality}) {
    if (q < kMinQuality || q > kMaxQuality) {
      throw Error(ErrorCode::ConfigError, "quality tier must be in [1, 10]");
    }
  }
  if (blurSigma && (!std::isfinite(*blurSigma) || *blurSigma < 0.0)) {
    throw Error(ErrorCode::ConfigError, "blur sigma must be >= 0");
  }
}

uint64_t SessionConfig::digest() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  mix(h, static_cast<uint64_t>(width));
  mix(h, static_cast<uint64_t>(height));
  mix(h, std::bit_cast<uint64_t>(threshold));
  mix(h, static_cast<uint64_t>(sourceQuality));
  mix(h, static_cast<uint64_t>(drivingQuality));
  mix(h, blurSigma ? std::bit_cast<uint64_t>(*blurSigma) : ~0ULL);
  return h;
}

SessionState SessionState::initial(const SessionConfig& config) {
  config.validate();
  SessionState s;
  s.config = config;
  s.configDigest = config.digest();
  s.pool = SourcePool(config.threshold);
  s.stats.width = config.width;
  s.stats.height = config.height;
  return s;
}

void accountMessage(RateStats& stats, const WireMessage& msg) {
  ++stats.frameCount;
  stats.headerBytes += kMessageHeaderBytes;
  if (msg.type == MessageType::Source) {
    ++stats.sourceMessages;
    stats.sourceBytes += msg.serializedSize();
  } else {
    ++stats.drivingMessages;
    stats.drivingBytes += msg.serializedSize();
    stats.drivingPayloadBytes += msg.payload.size();
  }
}

EncoderStepResult encoderStep(const SessionState& state, const Frame& frame,
                              const BackendSuite& backend, const BaseCodec& codec,
                              Image* drivingInput) {
  const SessionConfig& cfg = state.config;
  if (frame.width() != cfg.width || frame.height() != cfg.height) {
    throw Error(ErrorCode::DimensionMismatch, "frame size differs from the session");
  }
  EncoderStepResult result{state, {}};
  WireMessage& msg = result.message;
  msg.frameIndex = state.nextFrameIndex;
  msg.type = MessageType::Driving;

  std::optional<BBox> box;
  try {
    box = backend.detector->detect(frame);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoFace) throw;
  }

  // A face whose pose cannot be measured is sent like a faceless frame.
  std::optional<EulerPose> measured;
  if (box) {
    try {
      measured = backend.poseEstimator->estimate(frame, *box);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::LandmarkFailure) throw;
    }
  }

  if (!measured) {
    msg.payload = codec.encode(frame, cfg.drivingQuality);
    if (drivingInput) *drivingInput = frame;
  } else {
    msg.box = WireBox::from(*box);
    msg.pose = QuantizedPose::from(*measured);
    const EulerPose pose = msg.pose.toPose();
    if (std::holds_alternative<NeedNewSource>(state.pool.classify(pose))) {
      msg.type = MessageType::Source;
      msg.payload = codec.encode(frame, cfg.sourceQuality);
      FacePatch crop{*box, faiv::crop(frame, *box), Mask(box->w, box->h, 255)};
      auto admitted = state.pool.addSource(std::move(crop), Landmarks{}, pose);
      if (!admitted) {
        throw Error(ErrorCode::ProtocolDesync, "new source rejected by the shadow pool");
      }
      result.state.pool = std::move(admitted->pool);
    } else {
      const Mask mask = backend.segmenter->segment(frame, *box);
      const double sigma = cfg.blurSigma ? *cfg.blurSigma : defaultBlurSigma(*box);
      Image blurred = gaussianBlurMasked(frame, mask, sigma);
      msg.payload = codec.encode(blurred, cfg.drivingQuality);
      if (drivingInput) *drivingInput = std::move(blurred);
    }
  }
  accountMessage(result.state.stats, msg);
  ++result.state.nextFrameIndex;
  return result;
}

DecoderStepResult decoderStep(const SessionState& state, const WireMessage& msg,
                              const BackendSuite& backend, const BaseCodec& codec) {
  const SessionConfig& cfg = state.config;
  if (msg.frameIndex != state.nextFrameIndex) {
    throw Error(ErrorCode::ProtocolDesync,
                "expected frame " + std::to_string(state.nextFrameIndex) + ", got " +
                    std::to_string(msg.frameIndex),
                msg.frameIndex);
  }
  Image decodedImage = codec.decode(msg.payload);
  if (decodedImage.width() != cfg.width || decodedImage.height() != cfg.height) {
    throw Error(ErrorCode::ProtocolDesync, "payload frame size differs from the session",
                msg.frameIndex);
  }
  Frame decoded(std::move(decodedImage));
  const BBox box = msg.box.toBBox();
  if (!msg.box.isNoFace() && (box.empty() || !box.fitsIn(cfg.width, cfg.height))) {
    throw Error(ErrorCode::ProtocolDesync, "bbox outside the frame", msg.frameIndex);
  }

  DecoderStepResult result{state, decoded, decoded, DecodeOutcome::NoFace};
  accountMessage(result.state.stats, msg);
  ++result.state.nextFrameIndex;

  if (msg.type == MessageType::Source) {
    if (msg.box.isNoFace()) {
      throw Error(ErrorCode::ProtocolDesync, "source frame without a face", msg.frameIndex);
    }
    const Mask seg = backend.segmenter->segment(decoded, box);
    Landmarks landmarks;
    try {
      landmarks = backend.landmarkDetector->detect(box, decoded);
    } catch (const Error& e) {
      // The entry is still admitted to keep both replicas in step; it will
      // fail reenactment and those frames fall back to D'.
      if (e.code() != ErrorCode::LandmarkFailure) throw;
    }
    FacePatch crop{box, faiv::crop(decoded, box), faiv::crop(seg, box)};
    auto admitted = state.pool.addSource(std::move(crop), std::move(landmarks), msg.pose.toPose());
    if (!admitted) {
      throw Error(ErrorCode::ProtocolDesync, "source pose too close to an existing entry",
                  msg.frameIndex);
    }
    result.state.pool = std::move(admitted->pool);
    result.outcome = DecodeOutcome::SourceFrame;
    return result;
  }

  if (msg.box.isNoFace()) {
    return result;
  }
  const ReenactPlan plan = state.pool.classify(msg.pose.toPose());
  if (std::holds_alternative<NeedNewSource>(plan)) {
    throw Error(ErrorCode::ProtocolDesync, "driving pose has no source within the threshold",
                msg.frameIndex);
  }
  Landmarks landmarks;
  try {
    landmarks = backend.landmarkDetector->detect(box, decoded);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::LandmarkFailure) throw;
    result.outcome = DecodeOutcome::LandmarkFallback;
    return result;
  }
  const Mask seg = backend.segmenter->segment(decoded, box);
  FacePatch face;
  try {
    face = reenactPlanToPatch(plan, state.pool, landmarks, box, *backend.reenactor);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ReenactFailure) throw;
    result.outcome = DecodeOutcome::ReenactFallback;
    return result;
  }
  // Restrict the reenacted face to the head segmented on D'.
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) {
      face.mask.at(x, y) =
          toSample(face.mask.at(x, y) * (seg.at(box.x + x, box.y + y) / 255.0));
    }
  }
  result.output = composite(face, decoded, box);
  result.outcome = DecodeOutcome::Reenacted;
  return result;
}

Encoder::Encoder(const SessionConfig& config, BackendSuite backend,
                 std::shared_ptr<const BaseCodec> codec)
    : backend_(std::move(backend)), codec_(std::move(codec)), state_(SessionState::initial(config)) {}

WireMessage Encoder::encode(const Frame& frame) {
  auto result = encoderStep(state_, frame, backend_, *codec_);
  state_ = std::move(result.state);
  return std::move(result.message);
}

Decoder::Decoder(const SessionConfig& config, BackendSuite backend,
                 std::shared_ptr<const BaseCodec> codec)
    : backend_(std::move(backend)), codec_(std::move(codec)), state_(SessionState::initial(config)) {}

DecoderStepResult Decoder::decode(const WireMessage& message) {
  auto result = decoderStep(state_, message, backend_, *codec_);
  state_ = result.state;
  return result;
}

} // namespace faiv
