#include "faiv/base_codec.hpp"
#include "faiv/error.hpp"
#include "faiv/image_io.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>

namespace faiv {

namespace {

namespace fs = std::filesystem;

class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("faiv-ext-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

void run(const std::string& command, const fs::path& in, const fs::path& out) {
  const std::string line = "(" + command + ") < " + quoted(in) + " > " + quoted(out);
  if (std::system(line.c_str()) != 0) {
    throw Error(ErrorCode::CodecError, "external codec command failed: " + command);
  }
}

} // namespace

ExternalCodec::ExternalCodec(std::string encodeCommand, std::string decodeCommand)
    : encodeCommand_(std::move(encodeCommand)), decodeCommand_(std::move(decodeCommand)) {
  if (encodeCommand_.empty() || decodeCommand_.empty()) {
    throw Error(ErrorCode::ConfigError, "external codec needs both encode and decode commands");
  }
}

std::vector<uint8_t> ExternalCodec::encode(const Image& image, int quality) const {
  qualityTier(quality);
  TempDir dir;
  writeFileBytes(dir.path() / "in.raw", encodeRaw(image));
  std::string cmd = encodeCommand_;
  for (auto pos = cmd.find("{quality}"); pos != std::string::npos; pos = cmd.find("{quality}")) {
    cmd.replace(pos, 9, std::to_string(quality));
  }
  run(cmd, dir.path() / "in.raw", dir.path() / "out.bin");
  return readFileBytes(dir.path() / "out.bin");
}

Image ExternalCodec::decode(std::span<const uint8_t> bytes) const {
  TempDir dir;
  writeFileBytes(dir.path() / "in.bin", bytes);
  run(decodeCommand_, dir.path() / "in.bin", dir.path() / "out.raw");
  return decodeRaw(readFileBytes(dir.path() / "out.raw"));
}

} // namespace faiv
