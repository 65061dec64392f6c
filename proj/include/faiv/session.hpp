#pragma once

// Encoder and decoder state machines. Steps are pure functions of the
// previous state; the Encoder/Decoder wrappers commit a new state only when
// a step succeeds, so a failing step leaves the session unchanged.

#include "faiv/base_codec.hpp"
#include "faiv/rate.hpp"
#include "faiv/source_pool.hpp"
#include "faiv/vision.hpp"
#include "faiv/wire.hpp"

#include <memory>
#include <optional>

namespace faiv {

inline constexpr int kDefaultSourceQuality = 8;
inline constexpr int kDefaultDrivingQuality = 2;

struct SessionConfig {
  int width = 0;
  int height = 0;
  double threshold = kDefaultPoolThreshold;
  int sourceQuality = kDefaultSourceQuality;
  int drivingQuality = kDefaultDrivingQuality;
  /// Fixed blur sigma; unset selects diag(bbox) / 64 clamped to [2, 8].
  std::optional<double> blurSigma;

  /// Throws ConfigError for out-of-range fields.
  void validate() const;
  uint64_t digest() const;
};

struct SessionState {
  SessionConfig config;
  uint64_t configDigest = 0;
  SourcePool pool;
  uint32_t nextFrameIndex = 0;
  RateStats stats;

  static SessionState initial(const SessionConfig& config);
};

/// Adds one serialized message to the per-class byte accounting.
void accountMessage(RateStats& stats, const WireMessage& msg);

struct EncoderStepResult {
  SessionState state;
  WireMessage message;
};

/// Frames without a detectable face, or whose pose cannot be measured, are
/// sent as driving messages carrying the all-zero box.
/// `drivingInput`, when given, receives the image handed to the base codec
/// for driving messages (the face-blurred frame, or the frame itself when no
/// face was found); it is left untouched for source messages.
EncoderStepResult encoderStep(const SessionState& state, const Frame& frame,
                              const BackendSuite& backend, const BaseCodec& codec,
                              Image* drivingInput = nullptr);

enum class DecodeOutcome {
  SourceFrame,      // decoded source frame shown as-is
  Reenacted,        // face replaced by the interpolated reenactment
  NoFace,           // sentinel box: decoded frame shown as-is
  LandmarkFallback, // landmarks not found on D'; decoded frame shown
  ReenactFallback,  // reenactment failed; decoded frame shown
};

struct DecoderStepResult {
  SessionState state;
  Frame output;
  Frame decoded; // payload as decoded, before any reenactment
  DecodeOutcome outcome = DecodeOutcome::SourceFrame;
};

/// Throws ProtocolDesync for out-of-order frames, wrong dimensions or a
/// driving pose that the pool cannot serve; CodecError for corrupt payloads.
DecoderStepResult decoderStep(const SessionState& state, const WireMessage& message,
                              const BackendSuite& backend, const BaseCodec& codec);

class Encoder {
public:
  Encoder(const SessionConfig& config, BackendSuite backend, std::shared_ptr<const BaseCodec> codec);
  WireMessage encode(const Frame& frame);
  const SessionState& state() const noexcept { return state_; }

private:
  BackendSuite backend_;
  std::shared_ptr<const BaseCodec> codec_;
  SessionState state_;
};

class Decoder {
public:
  Decoder(const SessionConfig& config, BackendSuite backend, std::shared_ptr<const BaseCodec> codec);
  DecoderStepResult decode(const WireMessage& message);
  const SessionState& state() const noexcept { return state_; }

private:
  BackendSuite backend_;
  std::shared_ptr<const BaseCodec> codec_;
  SessionState state_;
};

} // namespace faiv
