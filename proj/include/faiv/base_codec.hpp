#pragma once

// Lossy frame codec carrying pixel payloads. The reference implementation is
// an intra-only block-DCT codec; ExternalCodec delegates to a command pair.

#include "faiv/image.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace faiv {

inline constexpr int kMinQuality = 1;
inline constexpr int kMaxQuality = 10;

struct QualityTier {
  int downsample;    // 1, 2, 4 or 8
  double lumaStep;   // quantizer step for Y
  double chromaStep; // quantizer step for Co and Cg
};

/// Throws InvalidArgument outside [1, 10].
QualityTier qualityTier(int quality);

class BaseCodec {
public:
  virtual ~BaseCodec() = default;
  virtual std::string name() const = 0;
  virtual std::vector<uint8_t> encode(const Image& image, int quality) const = 0;
  /// Throws CodecError naming the failing segment, detail = byte offset.
  virtual Image decode(std::span<const uint8_t> bytes) const = 0;
};

/// Downsample, YCoCg, 8x8 DCT, uniform quantization, zig-zag run-length and
/// canonical Huffman coding with per-frame tables.
///
/// Stream layout: byte 0 = 0xA0 | quality, u16 width, u16 height (big
/// endian), bit-packed Huffman tables and block symbols, CRC-16/CCITT of all
/// preceding bytes.
class ReferenceCodec final : public BaseCodec {
public:
  std::string name() const override { return "reference"; }
  std::vector<uint8_t> encode(const Image& image, int quality) const override;
  Image decode(std::span<const uint8_t> bytes) const override;
};

/// Runs `encodeCommand` / `decodeCommand` through the shell. The encoder
/// reads a FAIVRAW1 frame on stdin and writes the payload on stdout; the
/// decoder does the reverse. "{quality}" in the encode command is replaced
/// by the tier number.
class ExternalCodec final : public BaseCodec {
public:
  ExternalCodec(std::string encodeCommand, std::string decodeCommand);
  std::string name() const override { return "external"; }
  std::vector<uint8_t> encode(const Image& image, int quality) const override;
  Image decode(std::span<const uint8_t> bytes) const override;

private:
  std::string encodeCommand_;
  std::string decodeCommand_;
};

uint16_t crc16(std::span<const uint8_t> bytes);

} // namespace faiv
