#include "faiv/error.hpp"
#include "faiv/wire.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace faiv;

namespace {

std::vector<uint8_t> fromHex(std::string_view hex) {
  std::vector<uint8_t> out;
  std::string digits;
  for (char c : hex)
    if (c != ' ') digits.push_back(c);
  for (std::size_t i = 0; i + 1 < digits.size(); i += 2)
    out.push_back(static_cast<uint8_t>(std::stoi(digits.substr(i, 2), nullptr, 16)));
  return out;
}

WireMessage randomMessage(std::mt19937_64& rng) {
  WireMessage m;
  m.type = rng() & 1 ? MessageType::Source : MessageType::Driving;
  m.frameIndex = static_cast<uint32_t>(rng());
  m.pose = {static_cast<int16_t>(rng()), static_cast<int16_t>(rng()), static_cast<int16_t>(rng())};
  m.box = {static_cast<uint16_t>(rng()), static_cast<uint16_t>(rng()), static_cast<uint16_t>(rng()),
           static_cast<uint16_t>(rng())};
  m.payload.resize(rng() % 300);
  for (uint8_t& b : m.payload) b = static_cast<uint8_t>(rng());
  return m;
}

WireErrorKind kindOf(std::span<const uint8_t> bytes, std::size_t* offset = nullptr) {
  try {
    deserialize(bytes);
  } catch (const WireError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    if (offset) *offset = static_cast<std::size_t>(e.detail());
    return e.kind();
  }
  ADD_FAILURE() << "parsed";
  return WireErrorKind::TrailingBytes;
}

} // namespace

TEST(Wire, DocumentedVector) {
  const auto bytes = fromHex("46 56 01 01 00000007 03E8 FDF3 0000 0064 0078 0100 0100 00000000");
  ASSERT_EQ(bytes.size(), kMessageHeaderBytes);
  const WireMessage m = deserialize(bytes);
  EXPECT_EQ(m.type, MessageType::Driving);
  EXPECT_EQ(m.frameIndex, 7u);
  EXPECT_EQ(m.pose, (QuantizedPose{1000, -525, 0}));
  EXPECT_DOUBLE_EQ(m.pose.toPose().yaw, 10.0);
  EXPECT_DOUBLE_EQ(m.pose.toPose().pitch, -5.25);
  EXPECT_EQ(m.box, (WireBox{100, 120, 256, 256}));
  EXPECT_TRUE(m.payload.empty());

  WireMessage built;
  built.type = MessageType::Driving;
  built.frameIndex = 7;
  built.pose = QuantizedPose::from({10.0, -5.25, 0.0});
  built.box = WireBox::from({100, 120, 256, 256});
  EXPECT_EQ(serialize(built), bytes);
}

TEST(Wire, RandomRoundTrips) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 10000; ++i) {
    const WireMessage m = randomMessage(rng);
    const auto bytes = serialize(m);
    ASSERT_EQ(bytes.size(), kMessageHeaderBytes + m.payload.size());
    ASSERT_EQ(deserialize(bytes), m);
  }
}

TEST(Wire, ParseErrorsCarryOffsets) {
  WireMessage m;
  m.payload = {1, 2, 3, 4, 5, 6, 7, 8};
  const auto bytes = serialize(m);

  std::size_t offset = 0;
  EXPECT_EQ(kindOf(std::span(bytes).first(bytes.size() - 3), &offset), WireErrorKind::Truncated);
  // Truncation is reported at the end of the available data.
  EXPECT_EQ(offset, bytes.size() - 3);
  EXPECT_EQ(kindOf(std::span(bytes).first(10), &offset), WireErrorKind::Truncated);

  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(kindOf(bad, &offset), WireErrorKind::BadMagic);
  EXPECT_EQ(offset, 0u);
  bad = bytes;
  bad[2] = 9;
  EXPECT_EQ(kindOf(bad, &offset), WireErrorKind::BadVersion);
  EXPECT_EQ(offset, 2u);
  bad = bytes;
  bad[3] = 7;
  EXPECT_EQ(kindOf(bad, &offset), WireErrorKind::BadType);
  EXPECT_EQ(offset, 3u);
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(kindOf(bad, &offset), WireErrorKind::TrailingBytes);
  EXPECT_EQ(offset, bytes.size());
}

TEST(Wire, PoseQuantizationRange) {
  EXPECT_EQ(QuantizedPose::from({180, -180, 0.004}), (QuantizedPose{18000, -18000, 0}));
  EXPECT_THROW(QuantizedPose::from({180.5, 0, 0}), Error);
  EXPECT_THROW(QuantizedPose::from({std::nan(""), 0, 0}), Error);
  EXPECT_TRUE(WireBox{}.isNoFace());
  EXPECT_THROW(WireBox::from({-1, 0, 5, 5}), Error);
}

TEST(Fvc, FileRoundTripAndStats) {
  std::mt19937_64 rng(7);
  FvcFile file;
  file.header = {kFileVersion, 800, 800};
  for (int i = 0; i < 50; ++i) {
    WireMessage m = randomMessage(rng);
    m.frameIndex = i;
    file.messages.push_back(m);
  }
  const auto bytes = writeFvc(file);
  const FvcFile back = parseFvc(bytes);
  EXPECT_EQ(back.header, file.header);
  EXPECT_EQ(back.messages, file.messages);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "FAIVCONF");

  const RateStats stats = rateStatsOf(back);
  EXPECT_EQ(stats.totalBytes() + kFilePreambleBytes, bytes.size());
  EXPECT_EQ(stats.frameCount, 50u);
  EXPECT_EQ(stats.headerBytes, 50 * kMessageHeaderBytes);
  EXPECT_EQ(stats.sourceMessages + stats.drivingMessages, 50u);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 1);
  try {
    parseFvc(truncated);
    FAIL();
  } catch (const WireError& e) {
    EXPECT_EQ(e.kind(), WireErrorKind::Truncated);
    EXPECT_GT(e.detail(), static_cast<int64_t>(kFilePreambleBytes));
  }
  auto badMagic = bytes;
  badMagic[0] = 'G';
  EXPECT_THROW(parseFvc(badMagic), WireError);
}
