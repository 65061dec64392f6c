#include "faiv/sim.hpp"

#include "faiv/error.hpp"
#include "faiv/image_io.hpp"
#include "faiv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <regex>
#include <set>
#include <sstream>

namespace faiv {

namespace {

double parseDouble(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, what + ": not a number: " + text);
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string hex64(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Uniform in [-1, 1] from the raw engine output so streams do not depend on
// the standard library's distribution implementations.
double symmetricUnit(std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

std::string_view outcomeName(DecodeOutcome outcome) {
  switch (outcome) {
  case DecodeOutcome::SourceFrame: return "source";
  case DecodeOutcome::Reenacted: return "reenacted";
  case DecodeOutcome::NoFace: return "no_face";
  case DecodeOutcome::LandmarkFallback: return "landmark_fallback";
  case DecodeOutcome::ReenactFallback: return "reenact_fallback";
  }
  return "unknown";
}

std::string frameName(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.png", index);
  return buf;
}

bool parseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ConfigError, "key " + key + ": not a boolean: " + v);
}

[[noreturn]] void rethrowWithFrame(const Error& e, std::size_t frame) {
  throw Error(e.code(), "frame " + std::to_string(frame) + ": " + e.what(),
              static_cast<int64_t>(frame));
}

} // namespace

Trajectory Trajectory::parse(const std::string& text) {
  const std::string t = trim(text);
  static const std::regex sweep(R"(sweep\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\))");
  static const std::regex walk(R"(random-walk\(\s*([^)\s]+)\s*\))");
  std::smatch m;
  Trajectory out;
  if (t == "hold") return out;
  if (std::regex_match(t, m, sweep)) {
    out.kind = TrajectoryKind::Sweep;
    out.from = parseDouble(m[1], "trajectory");
    out.to = parseDouble(m[2], "trajectory");
    if (std::abs(out.from) > kMaxRenderAngle || std::abs(out.to) > kMaxRenderAngle) {
      throw Error(ErrorCode::ConfigError, "sweep yaw outside [-75, 75]");
    }
    return out;
  }
  if (std::regex_match(t, m, walk)) {
    out.kind = TrajectoryKind::RandomWalk;
    out.step = parseDouble(m[1], "trajectory");
    if (out.step <= 0.0 || out.step > 45.0) {
      throw Error(ErrorCode::ConfigError, "random-walk step must be in (0, 45]");
    }
    return out;
  }
  throw Error(ErrorCode::ConfigError, "unknown trajectory: " + text);
}

std::string Trajectory::toString() const {
  switch (kind) {
  case TrajectoryKind::Hold: return "hold";
  case TrajectoryKind::Sweep: return "sweep(" + fmt(from, 3) + "," + fmt(to, 3) + ")";
  case TrajectoryKind::RandomWalk: return "random-walk(" + fmt(step, 3) + ")";
  }
  return "hold";
}

std::vector<EulerPose> trajectoryPoses(const Trajectory& trajectory, int frames,
                                       std::optional<uint64_t> seed) {
  if (frames < 1) throw Error(ErrorCode::InvalidArgument, "frame count must be >= 1");
  std::vector<EulerPose> poses;
  poses.reserve(static_cast<std::size_t>(frames));
  switch (trajectory.kind) {
  case TrajectoryKind::Hold:
    poses.assign(static_cast<std::size_t>(frames), EulerPose{});
    break;
  case TrajectoryKind::Sweep:
    for (int i = 0; i < frames; ++i) {
      const double t = frames == 1 ? 0.0 : static_cast<double>(i) / (frames - 1);
      poses.push_back({trajectory.from + t * (trajectory.to - trajectory.from), 0.0, 0.0});
    }
    break;
  case TrajectoryKind::RandomWalk: {
    if (!seed) throw Error(ErrorCode::ConfigError, "random-walk trajectory needs a seed");
    std::mt19937_64 rng(*seed);
    EulerPose p{};
    for (int i = 0; i < frames; ++i) {
      if (i > 0) {
        p.yaw = std::clamp(p.yaw + trajectory.step * symmetricUnit(rng), -kWalkYawPitchLimit,
                           kWalkYawPitchLimit);
        p.pitch = std::clamp(p.pitch + trajectory.step * symmetricUnit(rng), -kWalkYawPitchLimit,
                             kWalkYawPitchLimit);
        p.roll = std::clamp(p.roll + trajectory.step * symmetricUnit(rng), -kWalkRollLimit,
                            kWalkRollLimit);
      }
      poses.push_back(p);
    }
    break;
  }
  }
  return poses;
}

SimConfig SimConfig::fromConfig(const KeyValueConfig& cfg) {
  static const std::set<std::string> known{
      "width",         "height",         "frames",          "trajectory",
      "seed",          "threshold",      "driving_quality", "source_quality",
      "blur_sigma",    "backend",        "avatar_seed",     "avatar_file",
      "external_encode", "external_decode", "write_frames"};
  for (const auto& [key, value] : cfg.values()) {
    if (!known.count(key)) throw Error(ErrorCode::ConfigError, "unknown key: " + key);
  }
  SimConfig c;
  c.width = static_cast<int>(cfg.integer("width", c.width));
  c.height = static_cast<int>(cfg.integer("height", c.height));
  c.frames = static_cast<int>(cfg.integer("frames", c.frames));
  if (auto t = cfg.get("trajectory")) c.trajectory = Trajectory::parse(*t);
  if (cfg.has("seed")) {
    const long long s = cfg.integer("seed", 0);
    if (s < 0) throw Error(ErrorCode::ConfigError, "seed must be >= 0");
    c.seed = static_cast<uint64_t>(s);
  }
  c.threshold = cfg.number("threshold", c.threshold);
  c.drivingQuality = static_cast<int>(cfg.integer("driving_quality", c.drivingQuality));
  c.sourceQuality = static_cast<int>(cfg.integer("source_quality", c.sourceQuality));
  if (auto s = cfg.get("blur_sigma"); s && *s != "adaptive") {
    c.blurSigma = parseDouble(*s, "blur_sigma");
  }
  c.backend = cfg.getOr("backend", c.backend);
  if (cfg.has("avatar_seed")) {
    const long long s = cfg.integer("avatar_seed", 0);
    if (s < 0) throw Error(ErrorCode::ConfigError, "avatar_seed must be >= 0");
    c.avatarSeed = static_cast<uint64_t>(s);
  }
  if (auto p = cfg.get("avatar_file")) c.avatarFile = *p;
  c.externalEncode = cfg.getOr("external_encode", "");
  c.externalDecode = cfg.getOr("external_decode", "");
  if (auto w = cfg.get("write_frames")) c.writeFrames = parseBool("write_frames", *w);
  c.validate();
  return c;
}

SimConfig SimConfig::load(const std::filesystem::path& path) {
  return fromConfig(KeyValueConfig::load(path));
}

void SimConfig::validate() const {
  session().validate();
  if (frames < 1 || frames > 100000) {
    throw Error(ErrorCode::ConfigError, "frames must be in [1, 100000]");
  }
  if (trajectory.kind == TrajectoryKind::RandomWalk && !seed) {
    throw Error(ErrorCode::ConfigError, "random-walk trajectory needs a seed");
  }
  if (externalEncode.empty() != externalDecode.empty()) {
    throw Error(ErrorCode::ConfigError, "external_encode and external_decode go together");
  }
  if (backend != "synthetic") throw Error(ErrorCode::ConfigError, "unknown backend: " + backend);
}

SessionConfig SimConfig::session() const {
  SessionConfig s;
  s.width = width;
  s.height = height;
  s.threshold = threshold;
  s.sourceQuality = sourceQuality;
  s.drivingQuality = drivingQuality;
  s.blurSigma = blurSigma;
  return s;
}

AvatarParams SimConfig::avatar() const {
  if (avatarFile) {
    auto p = AvatarParams::fromConfig(KeyValueConfig::load(*avatarFile));
    p.validate();
    return p;
  }
  return defaultAvatarParams(std::min(width, height), avatarSeed);
}

std::shared_ptr<const BaseCodec> SimConfig::codec() const {
  if (!externalEncode.empty()) {
    return std::make_shared<ExternalCodec>(externalEncode, externalDecode);
  }
  return std::make_shared<ReferenceCodec>();
}

SimulationResult runSimulation(const SimConfig& config, const SimOptions& options) {
  config.validate();
  const auto poses = trajectoryPoses(config.trajectory, config.frames, config.seed);
  const AvatarParams avatar = config.avatar();
  const BackendSuite backend = makeBackend(config.backend, avatar);
  const auto codec = config.codec();
  const SessionConfig session = config.session();
  Encoder encoder(session, backend, codec);
  Decoder decoder(session, backend, codec);

  SimulationResult result;
  result.file.header = {kFileVersion, static_cast<uint16_t>(config.width),
                        static_cast<uint16_t>(config.height)};
  result.frames.reserve(poses.size());
  const double pixels = static_cast<double>(config.width) * config.height;
  uint64_t totalBytes = 0;

  for (std::size_t i = 0; i < poses.size(); ++i) {
    const RenderedAvatar pristine = renderAvatar(poses[i], avatar, config.width, config.height);
    WireMessage msg;
    DecoderStepResult decoded;
    try {
      msg = encoder.encode(pristine.frame);
      decoded = decoder.decode(msg);
    } catch (const Error& e) {
      rethrowWithFrame(e, i);
    }

    FrameRecord rec;
    rec.index = msg.frameIndex;
    rec.type = msg.type;
    rec.bytes = msg.serializedSize();
    rec.payloadBytes = msg.payload.size();
    totalBytes += rec.bytes;
    rec.cumulativeBpp = static_cast<double>(totalBytes) * 8.0 / (pixels * (i + 1.0));
    rec.outcome = decoded.outcome;
    rec.poolSize = decoder.state().pool.size();
    rec.encoderDigest = encoder.state().pool.digest();
    rec.decoderDigest = decoder.state().pool.digest();
    if (options.computeMetrics) {
      // Always against the pristine render, never against decoded data.
      rec.psnr = psnr(decoded.output, pristine.frame);
      rec.ssim = ssim(decoded.output, pristine.frame);
      const Image face = crop(pristine.frame, pristine.box);
      rec.facePsnr = psnr(crop(decoded.output, pristine.box), face);
      rec.baseFacePsnr = psnr(crop(decoded.decoded, pristine.box), face);
    }
    result.frames.push_back(rec);
    result.file.messages.push_back(std::move(msg));
    if (options.keepOutputs) result.outputs.push_back(std::move(decoded.output));
  }

  result.stats = encoder.state().stats;
  result.fvcBytes = writeFvc(result.file);
  if (!(rateStatsOf(result.file) == result.stats) ||
      result.stats.totalBytes() + kFilePreambleBytes != result.fvcBytes.size()) {
    throw Error(ErrorCode::ProtocolDesync, "rate accounting disagrees with the bitstream");
  }
  return result;
}

std::string reportCsv(const SimulationResult& result) {
  std::ostringstream out;
  out << "frame,type,bytes,payload_bytes,cumulative_bpp,psnr,ssim,face_psnr,base_face_psnr,"
         "outcome,pool_size,encoder_digest,decoder_digest\n";
  for (const auto& r : result.frames) {
    out << r.index << ',' << (r.type == MessageType::Source ? "source" : "driving") << ','
        << r.bytes << ',' << r.payloadBytes << ',' << fmt(r.cumulativeBpp, 9) << ','
        << fmt(r.psnr, 4) << ',' << fmt(r.ssim, 6) << ',' << fmt(r.facePsnr, 4) << ','
        << fmt(r.baseFacePsnr, 4) << ',' << outcomeName(r.outcome) << ',' << r.poolSize << ','
        << hex64(r.encoderDigest) << ',' << hex64(r.decoderDigest) << '\n';
  }
  return out.str();
}

void writeSimulationArtifacts(const SimConfig& config, const SimulationResult& result,
                              const std::filesystem::path& outDir) {
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + outDir.string());
  writeFileBytes(outDir / "session.fvc", result.fvcBytes);
  const std::string csv = reportCsv(result);
  writeFileBytes(outDir / "report.csv",
                 std::span(reinterpret_cast<const uint8_t*>(csv.data()), csv.size()));
  if (config.writeFrames && !result.outputs.empty()) {
    const auto dir = outDir / "frames";
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
    for (std::size_t i = 0; i < result.outputs.size(); ++i) {
      writePng(dir / frameName(i), result.outputs[i]);
    }
  }
}

std::optional<int> selectDrivingTier(const SimConfig& config, std::size_t payloadCap,
                                     int highestTier) {
  config.validate();
  if (highestTier < kMinQuality || highestTier > kMaxQuality) {
    throw Error(ErrorCode::InvalidArgument, "tier outside [1, 10]");
  }
  const auto poses = trajectoryPoses(config.trajectory, config.frames, config.seed);
  const AvatarParams avatar = config.avatar();
  const BackendSuite backend = makeBackend(config.backend, avatar);
  const auto codec = config.codec();
  SessionConfig session = config.session();
  session.drivingQuality = highestTier;
  SessionState state = SessionState::initial(session);

  // Tiers still within the cap on every frame seen so far, highest first.
  std::vector<int> feasible;
  for (int q = highestTier; q >= kMinQuality; --q) feasible.push_back(q);

  for (std::size_t i = 0; i < poses.size() && !feasible.empty(); ++i) {
    const RenderedAvatar frame = renderAvatar(poses[i], avatar, config.width, config.height);
    Image input;
    EncoderStepResult step;
    try {
      step = encoderStep(state, frame.frame, backend, *codec, &input);
    } catch (const Error& e) {
      rethrowWithFrame(e, i);
    }
    state = std::move(step.state);
    if (step.message.type != MessageType::Driving) continue;
    std::vector<int> kept;
    for (int q : feasible) {
      const std::size_t size =
          q == highestTier ? step.message.payload.size() : codec->encode(input, q).size();
      if (size <= payloadCap) kept.push_back(q);
    }
    feasible = std::move(kept);
  }
  if (feasible.empty()) return std::nullopt;
  return feasible.front();
}

std::vector<BudgetRow> budgetSweep(const SimConfig& config,
                                   const std::vector<std::optional<std::size_t>>& budgets) {
  if (budgets.empty()) throw Error(ErrorCode::InvalidArgument, "no budgets given");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (!budgets[i]) {
      if (i != 0) throw Error(ErrorCode::InvalidArgument, "unlimited budget must come first");
      continue;
    }
    if (*budgets[i] <= kMessageHeaderBytes) {
      throw Error(ErrorCode::InvalidArgument,
                  "budget " + std::to_string(*budgets[i]) + " leaves no payload space",
                  static_cast<int64_t>(*budgets[i]));
    }
    if (i > 0 && budgets[i - 1] && *budgets[i] >= *budgets[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "budgets must be strictly descending");
    }
  }

  std::vector<BudgetRow> rows;
  int ceiling = kMaxQuality;
  for (const auto& budget : budgets) {
    BudgetRow row;
    row.budget = budget;
    if (budget) {
      auto tier = selectDrivingTier(config, *budget - kMessageHeaderBytes, ceiling);
      if (!tier) {
        throw Error(ErrorCode::InvalidArgument,
                    "no quality tier fits a budget of " + std::to_string(*budget) + " bytes",
                    static_cast<int64_t>(*budget));
      }
      row.tier = *tier;
    } else {
      row.tier = kMaxQuality;
    }
    // Smaller budgets can only lower the tier.
    ceiling = row.tier;

    SimConfig run = config;
    run.drivingQuality = row.tier;
    const auto result = runSimulation(run);
    row.bpp = bitsPerPixel(result.stats);
    row.drivingBpp = drivingBitsPerPixel(result.stats);
    for (const auto& f : result.frames) {
      row.meanPsnr += f.psnr;
      row.meanSsim += f.ssim;
      row.meanFacePsnr += f.facePsnr;
      if (f.type == MessageType::Driving) {
        row.maxDrivingPayload = std::max(row.maxDrivingPayload, f.payloadBytes);
      }
    }
    const double n = static_cast<double>(result.frames.size());
    row.meanPsnr /= n;
    row.meanSsim /= n;
    row.meanFacePsnr /= n;
    row.fvcBytes = result.fvcBytes;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string budgetCsv(const std::vector<BudgetRow>& rows) {
  std::ostringstream out;
  out << "budget,tier,bpp,driving_bpp,mean_psnr,mean_ssim,mean_face_psnr,max_driving_payload\n";
  for (const auto& r : rows) {
    out << (r.budget ? std::to_string(*r.budget) : std::string("unlimited")) << ',' << r.tier
        << ',' << fmt(r.bpp, 9) << ',' << fmt(r.drivingBpp, 9) << ',' << fmt(r.meanPsnr, 4)
        << ',' << fmt(r.meanSsim, 6) << ',' << fmt(r.meanFacePsnr, 4) << ','
        << r.maxDrivingPayload << '\n';
  }
  return out.str();
}

std::vector<std::optional<std::size_t>> parseBudgets(const std::string& text) {
  std::vector<std::optional<std::size_t>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "unlimited") {
      out.push_back(std::nullopt);
      continue;
    }
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos ||
        item.size() > 12) {
      throw Error(ErrorCode::InvalidArgument, "bad budget: " + item);
    }
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no budgets given");
  return out;
}

std::vector<uint8_t> encodeFrames(const std::filesystem::path& framesDir, const SimConfig& config) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(framesDir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw Error(ErrorCode::IoError, "cannot list " + framesDir.string());
  if (files.empty()) throw Error(ErrorCode::IoError, "no PNG frames in " + framesDir.string());
  std::sort(files.begin(), files.end());

  std::optional<Encoder> encoder;
  SimConfig sized = config;
  FvcFile file;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Image image = readPng(files[i]);
    if (!encoder) {
      sized.width = image.width();
      sized.height = image.height();
      sized.validate();
      encoder.emplace(sized.session(), makeBackend(sized.backend, sized.avatar()), sized.codec());
      file.header = {kFileVersion, static_cast<uint16_t>(sized.width),
                     static_cast<uint16_t>(sized.height)};
    }
    if (image.width() != sized.width || image.height() != sized.height) {
      throw Error(ErrorCode::DimensionMismatch, files[i].string() + ": frame size differs",
                  static_cast<int64_t>(i));
    }
    try {
      file.messages.push_back(encoder->encode(Frame(std::move(image))));
    } catch (const Error& e) {
      rethrowWithFrame(e, i);
    }
  }
  return writeFvc(file);
}

std::size_t decodeToFrames(std::span<const uint8_t> fvc, const SimConfig& config,
                           const std::filesystem::path& outDir) {
  const FvcFile file = parseFvc(fvc);
  SimConfig sized = config;
  sized.width = file.header.width;
  sized.height = file.header.height;
  sized.validate();
  Decoder decoder(sized.session(), makeBackend(sized.backend, sized.avatar()), sized.codec());
  std::error_code ec;
  std::filesystem::create_directories(outDir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + outDir.string());
  for (std::size_t i = 0; i < file.messages.size(); ++i) {
    DecoderStepResult r;
    try {
      r = decoder.decode(file.messages[i]);
    } catch (const Error& e) {
      rethrowWithFrame(e, i);
    }
    writePng(outDir / frameName(i), r.output);
  }
  return file.messages.size();
}

std::string describeStats(const RateStats& stats) {
  char bpp[64];
  char dbpp[64];
  std::snprintf(bpp, sizeof bpp, "%.17g", bitsPerPixel(stats));
  std::snprintf(dbpp, sizeof dbpp, "%.17g", drivingBitsPerPixel(stats));
  std::ostringstream out;
  out << "width=" << stats.width << '\n'
      << "height=" << stats.height << '\n'
      << "frames=" << stats.frameCount << '\n'
      << "source_messages=" << stats.sourceMessages << '\n'
      << "driving_messages=" << stats.drivingMessages << '\n'
      << "source_bytes=" << stats.sourceBytes << '\n'
      << "driving_bytes=" << stats.drivingBytes << '\n'
      << "header_bytes=" << stats.headerBytes << '\n'
      << "driving_payload_bytes=" << stats.drivingPayloadBytes << '\n'
      << "total_bytes=" << stats.totalBytes() << '\n'
      << "bpp=" << bpp << '\n'
      << "driving_bpp=" << dbpp << '\n';
  return out.str();
}

} // namespace faiv
