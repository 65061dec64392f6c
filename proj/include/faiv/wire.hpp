#pragma once

// Bit-exact message framing and the .fvc container. All multi-byte integers
// are big-endian.
//
// Message: "FV" | version u8 | type u8 | frame_index u32 | pose 3 x i16
// (centidegrees: yaw, pitch, roll) | bbox 4 x u16 (x, y, w, h) |
// payload_len u32 | payload.
//
// File: "FAIVCONF" | version u32 | width u16 | height u16, then messages.

#include "faiv/error.hpp"
#include "faiv/geometry.hpp"
#include "faiv/image.hpp"
#include "faiv/rate.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace faiv {

inline constexpr uint8_t kWireVersion = 1;
// magic 2 + version 1 + type 1 + frame_index 4 + pose 6 + bbox 8 +
// payload_len 4.
inline constexpr std::size_t kMessageHeaderBytes = 26;
inline constexpr uint32_t kFileVersion = 1;
inline constexpr std::size_t kFilePreambleBytes = 16;

enum class MessageType : uint8_t { Source = 0, Driving = 1 };

struct QuantizedPose {
  int16_t yaw = 0;
  int16_t pitch = 0;
  int16_t roll = 0;

  bool operator==(const QuantizedPose&) const = default;

  /// Throws InvalidPose for poses outside the i16 centidegree range.
  static QuantizedPose from(const EulerPose& pose);
  EulerPose toPose() const;
};

struct WireBox {
  uint16_t x = 0;
  uint16_t y = 0;
  uint16_t w = 0;
  uint16_t h = 0;

  bool operator==(const WireBox&) const = default;

  /// All-zero box: the encoder found no face.
  bool isNoFace() const noexcept { return x == 0 && y == 0 && w == 0 && h == 0; }
  static WireBox from(const BBox& box);
  BBox toBBox() const { return {x, y, w, h}; }
};

struct WireMessage {
  MessageType type = MessageType::Driving;
  uint32_t frameIndex = 0;
  QuantizedPose pose;
  WireBox box;
  std::vector<uint8_t> payload;

  bool operator==(const WireMessage&) const = default;
  std::size_t serializedSize() const noexcept { return kMessageHeaderBytes + payload.size(); }
};

enum class WireErrorKind { Truncated, BadMagic, BadVersion, BadType, TrailingBytes };

/// ParseError with a machine-checkable reason; detail() is the byte offset.
class WireError : public Error {
public:
  WireError(WireErrorKind kind, const std::string& message, std::size_t offset);
  WireErrorKind kind() const noexcept { return kind_; }

private:
  WireErrorKind kind_;
};

void serializeInto(const WireMessage& msg, std::vector<uint8_t>& out);
std::vector<uint8_t> serialize(const WireMessage& msg);

/// Parses one message starting at `offset`; returns it and advances
/// `offset`. Error offsets are absolute positions in `bytes`.
WireMessage parseMessage(std::span<const uint8_t> bytes, std::size_t& offset);

/// Exactly one message; trailing bytes are an error.
WireMessage deserialize(std::span<const uint8_t> bytes);

struct FvcHeader {
  uint32_t version = kFileVersion;
  uint16_t width = 0;
  uint16_t height = 0;

  bool operator==(const FvcHeader&) const = default;
};

struct FvcFile {
  FvcHeader header;
  std::vector<WireMessage> messages;
};

std::vector<uint8_t> writeFvc(const FvcFile& file);
FvcFile parseFvc(std::span<const uint8_t> bytes);

/// Per-class byte accounting of a message sequence; one frame per message.
RateStats rateStatsOf(const FvcFile& file);

} // namespace faiv
