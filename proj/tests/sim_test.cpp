#include "faiv/error.hpp"
#include "faiv/image_io.hpp"
#include "faiv/sim.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <sstream>

using namespace faiv;
namespace fs = std::filesystem;

namespace {

SimConfig smallConfig(const std::string& trajectory, int frames) {
  SimConfig cfg;
  cfg.width = 256;
  cfg.height = 256;
  cfg.frames = frames;
  cfg.trajectory = Trajectory::parse(trajectory);
  cfg.seed = 42;
  cfg.writeFrames = false;
  return cfg;
}

ErrorCode codeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST(Trajectory, ParseAndPoses) {
  EXPECT_EQ(Trajectory::parse("hold").kind, TrajectoryKind::Hold);
  const Trajectory sweep = Trajectory::parse("sweep(0, 30)");
  EXPECT_EQ(sweep.kind, TrajectoryKind::Sweep);
  EXPECT_EQ(Trajectory::parse(sweep.toString()).to, 30.0);
  const auto poses = trajectoryPoses(sweep, 4, std::nullopt);
  EXPECT_DOUBLE_EQ(poses.front().yaw, 0.0);
  EXPECT_DOUBLE_EQ(poses[1].yaw, 10.0);
  EXPECT_DOUBLE_EQ(poses.back().yaw, 30.0);

  const Trajectory walk = Trajectory::parse("random-walk(3)");
  const auto a = trajectoryPoses(walk, 500, 7), b = trajectoryPoses(walk, 500, 7);
  EXPECT_EQ(a, b);
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_LE(std::abs(a[i].yaw - a[i - 1].yaw), 3.0 + 1e-12);
    EXPECT_LE(std::abs(a[i].yaw), kWalkYawPitchLimit);
    EXPECT_LE(std::abs(a[i].pitch), kWalkYawPitchLimit);
    EXPECT_LE(std::abs(a[i].roll), kWalkRollLimit);
  }
  EXPECT_EQ(codeOf([&] { trajectoryPoses(walk, 5, std::nullopt); }), ErrorCode::ConfigError);
  for (const char* bad : {"spin", "sweep(0)", "sweep(0,90)", "random-walk(0)", "random-walk(x)"}) {
    EXPECT_EQ(codeOf([&] { Trajectory::parse(bad); }), ErrorCode::ConfigError) << bad;
  }
}

TEST(SimConfig, FromConfigValidates) {
  const auto cfg = SimConfig::fromConfig(KeyValueConfig::parse(
      "width = 320\nheight = 240\nframes = 12\ntrajectory = sweep(-10,10)\nblur_sigma = 3\n"));
  EXPECT_EQ(cfg.width, 320);
  EXPECT_EQ(cfg.frames, 12);
  EXPECT_EQ(cfg.blurSigma, 3.0);
  EXPECT_EQ(codeOf([] { SimConfig::fromConfig(KeyValueConfig::parse("colour = red\n")); }),
            ErrorCode::ConfigError);
  EXPECT_EQ(codeOf([] { SimConfig::fromConfig(KeyValueConfig::parse("frames = 0\n")); }),
            ErrorCode::ConfigError);
  EXPECT_EQ(codeOf([] { SimConfig::fromConfig(KeyValueConfig::parse("driving_quality = 11\n")); }),
            ErrorCode::ConfigError);
  EXPECT_EQ(codeOf([] { SimConfig::fromConfig(KeyValueConfig::parse("trajectory = random-walk(2)\n")); }),
            ErrorCode::ConfigError);
  EXPECT_EQ(codeOf([] { SimConfig::fromConfig(KeyValueConfig::parse("backend = neural\n")); }),
            ErrorCode::ConfigError);
}

TEST(Simulate, HoldSendsOneSource) {
  const auto result = runSimulation(smallConfig("hold", 100), {.computeMetrics = false});
  EXPECT_EQ(result.stats.sourceMessages, 1u);
  EXPECT_EQ(result.stats.drivingMessages, 99u);
  EXPECT_EQ(result.frames.size(), 100u);
  EXPECT_EQ(result.file.messages.front().type, MessageType::Source);
}

TEST(Simulate, SweepSourcesMatchReplayOracle) {
  const auto result = runSimulation(smallConfig("sweep(0,60)", 61), {.computeMetrics = false});
  std::vector<EulerPose> sent;
  std::vector<bool> isSource;
  for (const WireMessage& m : result.file.messages) {
    sent.push_back(m.pose.toPose());
    isSource.push_back(m.type == MessageType::Source);
  }
  EXPECT_EQ(isSource, faiv::testing::replaySourceDecisions(sent, kDefaultPoolThreshold));
  EXPECT_EQ(result.stats.sourceMessages, static_cast<uint64_t>(std::count(isSource.begin(), isSource.end(), true)));
  for (const FrameRecord& r : result.frames) EXPECT_EQ(r.encoderDigest, r.decoderDigest);
}

TEST(Simulate, DeterministicArtifacts) {
  SimConfig cfg = smallConfig("random-walk(4)", 20);
  cfg.writeFrames = true;
  const auto a = runSimulation(cfg, {.computeMetrics = true, .keepOutputs = true});
  const auto b = runSimulation(cfg, {.computeMetrics = true, .keepOutputs = true});
  EXPECT_EQ(a.fvcBytes, b.fvcBytes);
  EXPECT_EQ(reportCsv(a), reportCsv(b));
  EXPECT_EQ(a.outputs, b.outputs);

  TempDir dir("faiv_sim_artifacts");
  writeSimulationArtifacts(cfg, a, dir.path);
  EXPECT_EQ(readFileBytes(dir.path / "session.fvc"), a.fvcBytes);
  EXPECT_TRUE(fs::exists(dir.path / "frames" / "frame_00019.png"));
  EXPECT_EQ(readPng(dir.path / "frames" / "frame_00000.png"), a.outputs.front());
}

TEST(Simulate, ReportIsConsistentWithStats) {
  const auto result = runSimulation(smallConfig("sweep(-20,20)", 30));
  const RateStats fromFile = rateStatsOf(parseFvc(result.fvcBytes));
  EXPECT_EQ(fromFile, result.stats);
  EXPECT_EQ(fromFile.totalBytes() + kFilePreambleBytes, result.fvcBytes.size());
  const std::string csv = reportCsv(result);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
  EXPECT_EQ(result.frames.back().cumulativeBpp, bitsPerPixel(result.stats));
  uint64_t total = 0;
  for (const FrameRecord& r : result.frames) {
    total += r.bytes;
    EXPECT_GT(r.psnr, 0.0);
    EXPECT_LE(r.ssim, 1.0);
  }
  EXPECT_EQ(total, result.stats.totalBytes());
}

TEST(Simulate, StatsBppIsExactArithmetic) {
  SimConfig cfg = smallConfig("hold", 4);
  cfg.width = 800;
  cfg.height = 800;
  const auto result = runSimulation(cfg, {.computeMetrics = false});
  const std::string text = describeStats(rateStatsOf(parseFvc(result.fvcBytes)));
  const double expected = static_cast<double>(result.stats.totalBytes() * 8) / (640000.0 * 4);
  std::istringstream in(text);
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("bpp=", 0) == 0) {
      EXPECT_EQ(std::stod(line.substr(4)), expected);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(bitsPerPixel(result.stats), expected);
}

TEST(BudgetSweep, MonotoneAndSelfConsistent) {
  const SimConfig cfg = smallConfig("sweep(0,30)", 16);
  const auto rows = budgetSweep(cfg, parseBudgets("unlimited,2000,600,250"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_FALSE(rows[0].budget.has_value());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RateStats s = rateStatsOf(parseFvc(rows[i].fvcBytes));
    EXPECT_EQ(rows[i].bpp, bitsPerPixel(s));
    if (rows[i].budget) {
      EXPECT_LE(rows[i].maxDrivingPayload + kMessageHeaderBytes, *rows[i].budget);
    }
    EXPECT_LE(rows[i].meanPsnr, rows[0].meanPsnr);
    if (i > 0) {
      EXPECT_LE(rows[i].tier, rows[i - 1].tier);
    }
  }
  const std::string csv = budgetCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "budget,tier,bpp,driving_bpp,mean_psnr,mean_ssim,mean_face_psnr,max_driving_payload");
}

TEST(BudgetSweep, RejectsInvalidBudgets) {
  const SimConfig cfg = smallConfig("hold", 3);
  EXPECT_EQ(codeOf([&] { budgetSweep(cfg, {std::size_t{24}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(codeOf([&] { budgetSweep(cfg, {std::size_t{26}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(codeOf([&] { budgetSweep(cfg, {std::size_t{500}, std::size_t{900}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(codeOf([&] { budgetSweep(cfg, {std::size_t{500}, std::nullopt}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(codeOf([&] { parseBudgets("100,abc"); }), ErrorCode::InvalidArgument);
}

TEST(Files, EncodeDecodeRoundTripFrameCount) {
  TempDir dir("faiv_sim_files");
  const SimConfig cfg = smallConfig("sweep(-10,10)", 7);
  const AvatarParams params = cfg.avatar();
  const auto poses = trajectoryPoses(cfg.trajectory, cfg.frames, cfg.seed);
  fs::create_directories(dir.path / "in");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "f%03zu.png", i);
    writePng(dir.path / "in" / name, renderAvatar(poses[i], params, 256, 256).frame);
  }
  const auto bytes = encodeFrames(dir.path / "in", cfg);
  EXPECT_EQ(parseFvc(bytes).messages.size(), poses.size());
  EXPECT_EQ(decodeToFrames(bytes, cfg, dir.path / "out"), poses.size());
  std::size_t written = 0;
  for (const auto& entry : fs::directory_iterator(dir.path / "out")) written += entry.path().extension() == ".png";
  EXPECT_EQ(written, poses.size());

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  EXPECT_EQ(codeOf([&] { decodeToFrames(truncated, cfg, dir.path / "bad"); }), ErrorCode::ParseError);
  EXPECT_EQ(codeOf([&] { encodeFrames(dir.path / "missing", cfg); }), ErrorCode::IoError);
}

TEST(Files, ExternalCodecHook) {
  SimConfig cfg = smallConfig("hold", 3);
  cfg.width = cfg.height = 64;
  cfg.externalEncode = "cat";
  cfg.externalDecode = "cat";
  const auto result = runSimulation(cfg, {.computeMetrics = true});
  // The pass-through codec ships raw frames: header + planes.
  EXPECT_EQ(result.file.messages.front().payload.size(), 16u + 3 * 64 * 64);
  EXPECT_EQ(result.frames.front().psnr, 99.0);
  cfg.externalDecode.clear();
  EXPECT_EQ(codeOf([&] { cfg.validate(); }), ErrorCode::ConfigError);
}
