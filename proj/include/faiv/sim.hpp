#pragma once

// Session simulator behind the command-line tool: synthetic trajectories,
// end-to-end encode/decode, reports and the byte-budget sweep.

#include "faiv/base_codec.hpp"
#include "faiv/kv_config.hpp"
#include "faiv/session.hpp"
#include "faiv/synthetic_backend.hpp"
#include "faiv/wire.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace faiv {

enum class TrajectoryKind { Hold, Sweep, RandomWalk };

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::Hold;
  double from = 0.0; // sweep start yaw
  double to = 0.0;   // sweep end yaw
  double step = 0.0; // random-walk step bound, degrees

  /// "hold", "sweep(a,b)" or "random-walk(step)"; throws ConfigError.
  static Trajectory parse(const std::string& text);
  std::string toString() const;
};

inline constexpr double kWalkYawPitchLimit = 45.0;
inline constexpr double kWalkRollLimit = 20.0;

/// Poses for `frames` frames. Sweeps move yaw linearly (pitch = roll = 0);
/// random walks add uniform steps in [-step, step] per angle and clamp yaw
/// and pitch to +-45 and roll to +-20 degrees.
std::vector<EulerPose> trajectoryPoses(const Trajectory& trajectory, int frames,
                                       std::optional<uint64_t> seed);

struct SimConfig {
  int width = 256;
  int height = 256;
  int frames = 100;
  Trajectory trajectory;
  std::optional<uint64_t> seed;
  double threshold = kDefaultPoolThreshold;
  int drivingQuality = kDefaultDrivingQuality;
  int sourceQuality = kDefaultSourceQuality;
  std::optional<double> blurSigma; // unset: adaptive default
  std::string backend = "synthetic";
  uint64_t avatarSeed = 0;
  std::optional<std::filesystem::path> avatarFile;
  std::string externalEncode; // both set: external codec replaces the reference
  std::string externalDecode;
  bool writeFrames = true;

  /// Throws ConfigError; unknown keys are rejected.
  static SimConfig fromConfig(const KeyValueConfig& cfg);
  static SimConfig load(const std::filesystem::path& path);
  void validate() const;

  SessionConfig session() const;
  AvatarParams avatar() const;
  std::shared_ptr<const BaseCodec> codec() const;
};

struct FrameRecord {
  uint32_t index = 0;
  MessageType type = MessageType::Driving;
  std::size_t bytes = 0;        // serialized message size
  std::size_t payloadBytes = 0; // base-codec payload
  double cumulativeBpp = 0.0;
  double psnr = 0.0;            // decoder output vs pristine frame
  double ssim = 0.0;
  double facePsnr = 0.0;        // over the pristine face box
  double baseFacePsnr = 0.0;    // decoded payload D' alone, same box
  DecodeOutcome outcome = DecodeOutcome::SourceFrame;
  std::size_t poolSize = 0;
  uint64_t encoderDigest = 0;
  uint64_t decoderDigest = 0;
};

struct SimulationResult {
  FvcFile file;
  std::vector<uint8_t> fvcBytes;
  RateStats stats;
  std::vector<FrameRecord> frames;
  std::vector<Frame> outputs; // only when requested
};

struct SimOptions {
  bool computeMetrics = true;
  bool keepOutputs = false;
};

/// Renders the trajectory and runs encoder and decoder in lockstep. Backend
/// failures are rethrown with the frame index as detail.
SimulationResult runSimulation(const SimConfig& config, const SimOptions& options = {});

/// CSV header and rows; one row per frame.
std::string reportCsv(const SimulationResult& result);

/// Writes session.fvc, report.csv and (if enabled) frames/frame_NNNNN.png.
void writeSimulationArtifacts(const SimConfig& config, const SimulationResult& result,
                              const std::filesystem::path& outDir);

/// Highest driving tier whose payload stays within `payloadCap` bytes on
/// every driving frame of the configured session; nullopt if none fits.
std::optional<int> selectDrivingTier(const SimConfig& config, std::size_t payloadCap,
                                     int highestTier = kMaxQuality);

struct BudgetRow {
  std::optional<std::size_t> budget; // unset: unlimited
  int tier = 0;
  double bpp = 0.0;
  double drivingBpp = 0.0;
  double meanPsnr = 0.0;
  double meanSsim = 0.0;
  double meanFacePsnr = 0.0;
  std::size_t maxDrivingPayload = 0;
  std::vector<uint8_t> fvcBytes;
};

/// Budgets in bytes per frame (header + payload), strictly descending; an
/// unset entry means unlimited and may only come first. Throws
/// InvalidArgument for budgets <= the message header size or when no tier
/// fits.
std::vector<BudgetRow> budgetSweep(const SimConfig& config,
                                   const std::vector<std::optional<std::size_t>>& budgets);

std::string budgetCsv(const std::vector<BudgetRow>& rows);

/// Parses "1000,500,150" (also "unlimited").
std::vector<std::optional<std::size_t>> parseBudgets(const std::string& text);

/// Encodes a directory of PNG frames (sorted by file name) to .fvc bytes.
std::vector<uint8_t> encodeFrames(const std::filesystem::path& framesDir, const SimConfig& config);

/// Decodes .fvc bytes and writes frame_NNNNN.png files; returns the count.
std::size_t decodeToFrames(std::span<const uint8_t> fvc, const SimConfig& config,
                           const std::filesystem::path& outDir);

std::string describeStats(const RateStats& stats);

} // namespace faiv
