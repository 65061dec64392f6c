#include "faiv/wire.hpp"

#include <algorithm>
#include <cmath>

namespace faiv {

namespace {

constexpr std::array<uint8_t, 2> kMagic = {'F', 'V'};
constexpr std::array<uint8_t, 8> kFileMagic = {'F', 'A', 'I', 'V', 'C', 'O', 'N', 'F'};

void put16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xff));
}

void put32(std::vector<uint8_t>& out, uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<uint8_t>(v >> shift));
}

uint16_t get16(std::span<const uint8_t> b, std::size_t at) {
  return static_cast<uint16_t>((b[at] << 8) | b[at + 1]);
}

uint32_t get32(std::span<const uint8_t> b, std::size_t at) {
  return (static_cast<uint32_t>(b[at]) << 24) | (static_cast<uint32_t>(b[at + 1]) << 16) |
         (static_cast<uint32_t>(b[at + 2]) << 8) | b[at + 3];
}

uint16_t toU16(int v) {
  if (v < 0 || v > 0xffff) {
    throw Error(ErrorCode::OutOfRange, "bbox field does not fit in u16");
  }
  return static_cast<uint16_t>(v);
}

} // namespace

QuantizedPose QuantizedPose::from(const EulerPose& pose) {
  validatePose(pose);
  return {toCentidegrees(pose.yaw), toCentidegrees(pose.pitch), toCentidegrees(pose.roll)};
}

EulerPose QuantizedPose::toPose() const {
  return {fromCentidegrees(yaw), fromCentidegrees(pitch), fromCentidegrees(roll)};
}

WireBox WireBox::from(const BBox& box) {
  return {toU16(box.x), toU16(box.y), toU16(box.w), toU16(box.h)};
}

WireError::WireError(WireErrorKind kind, const std::string& message, std::size_t offset)
    : Error(ErrorCode::ParseError, message + " at byte " + std::to_string(offset),
            static_cast<int64_t>(offset)),
      kind_(kind) {}

void serializeInto(const WireMessage& msg, std::vector<uint8_t>& out) {
  if (msg.payload.size() > 0xffffffffULL) {
    throw Error(ErrorCode::OutOfRange, "payload too large");
  }
  const std::size_t start = out.size();
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(kWireVersion);
  out.push_back(static_cast<uint8_t>(msg.type));
  put32(out, msg.frameIndex);
  put16(out, static_cast<uint16_t>(msg.pose.yaw));
  put16(out, static_cast<uint16_t>(msg.pose.pitch));
  put16(out, static_cast<uint16_t>(msg.pose.roll));
  put16(out, msg.box.x);
  put16(out, msg.box.y);
  put16(out, msg.box.w);
  put16(out, msg.box.h);
  put32(out, static_cast<uint32_t>(msg.payload.size()));
  if (out.size() - start != kMessageHeaderBytes) {
    throw Error(ErrorCode::InvalidArgument, "message header size mismatch");
  }
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
}

std::vector<uint8_t> serialize(const WireMessage& msg) {
  std::vector<uint8_t> out;
  out.reserve(msg.serializedSize());
  serializeInto(msg, out);
  return out;
}

WireMessage parseMessage(std::span<const uint8_t> bytes, std::size_t& offset) {
  const std::size_t base = offset;
  if (bytes.size() < base || bytes.size() - base < kMessageHeaderBytes) {
    throw WireError(WireErrorKind::Truncated, "truncated message header", bytes.size());
  }
  if (bytes[base] != kMagic[0] || bytes[base + 1] != kMagic[1]) {
    throw WireError(WireErrorKind::BadMagic, "bad message magic", base);
  }
  if (bytes[base + 2] != kWireVersion) {
    throw WireError(WireErrorKind::BadVersion,
                    "unsupported message version " + std::to_string(bytes[base + 2]), base + 2);
  }
  WireMessage msg;
  switch (bytes[base + 3]) {
  case 0:
    msg.type = MessageType::Source;
    break;
  case 1:
    msg.type = MessageType::Driving;
    break;
  default:
    throw WireError(WireErrorKind::BadType, "unknown message type", base + 3);
  }
  msg.frameIndex = get32(bytes, base + 4);
  msg.pose.yaw = static_cast<int16_t>(get16(bytes, base + 8));
  msg.pose.pitch = static_cast<int16_t>(get16(bytes, base + 10));
  msg.pose.roll = static_cast<int16_t>(get16(bytes, base + 12));
  msg.box.x = get16(bytes, base + 14);
  msg.box.y = get16(bytes, base + 16);
  msg.box.w = get16(bytes, base + 18);
  msg.box.h = get16(bytes, base + 20);
  const uint32_t payloadLength = get32(bytes, base + kMessageHeaderBytes - 4);
  const std::size_t payloadStart = base + kMessageHeaderBytes;
  if (bytes.size() - payloadStart < payloadLength) {
    throw WireError(WireErrorKind::Truncated,
                    "payload of " + std::to_string(payloadLength) + " bytes truncated",
                    bytes.size());
  }
  msg.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(payloadStart),
                     bytes.begin() + static_cast<std::ptrdiff_t>(payloadStart + payloadLength));
  offset = payloadStart + payloadLength;
  return msg;
}

WireMessage deserialize(std::span<const uint8_t> bytes) {
  std::size_t offset = 0;
  WireMessage msg = parseMessage(bytes, offset);
  if (offset != bytes.size()) {
    throw WireError(WireErrorKind::TrailingBytes, "trailing bytes after message", offset);
  }
  return msg;
}

std::vector<uint8_t> writeFvc(const FvcFile& file) {
  std::vector<uint8_t> out(kFileMagic.begin(), kFileMagic.end());
  put32(out, file.header.version);
  put16(out, file.header.width);
  put16(out, file.header.height);
  for (const WireMessage& msg : file.messages) serializeInto(msg, out);
  return out;
}

FvcFile parseFvc(std::span<const uint8_t> bytes) {
  if (bytes.size() < kFilePreambleBytes) {
    throw WireError(WireErrorKind::Truncated, "truncated file preamble", bytes.size());
  }
  if (!std::equal(kFileMagic.begin(), kFileMagic.end(), bytes.begin())) {
    throw WireError(WireErrorKind::BadMagic, "bad file magic", 0);
  }
  FvcFile file;
  file.header.version = get32(bytes, 8);
  if (file.header.version != kFileVersion) {
    throw WireError(WireErrorKind::BadVersion,
                    "unsupported file version " + std::to_string(file.header.version), 8);
  }
  file.header.width = get16(bytes, 12);
  file.header.height = get16(bytes, 14);
  std::size_t offset = kFilePreambleBytes;
  while (offset < bytes.size()) {
    file.messages.push_back(parseMessage(bytes, offset));
  }
  return file;
}

RateStats rateStatsOf(const FvcFile& file) {
  RateStats stats;
  stats.width = file.header.width;
  stats.height = file.header.height;
  for (const WireMessage& msg : file.messages) {
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
  return stats;
}

} // namespace faiv
