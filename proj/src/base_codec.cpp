#include "faiv/base_codec.hpp"

#include "bit_io.hpp"
#include "faiv/error.hpp"
#include "huffman.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace faiv {

using detail::BitReader;
using detail::BitWriter;
using detail::CanonicalHuffman;

QualityTier qualityTier(int quality) {
  static constexpr std::array<QualityTier, kMaxQuality> kTiers = {{
      {8, 120.0, 768.0},
      {8, 64.0, 256.0},
      {8, 32.0, 128.0},
      {4, 32.0, 96.0},
      {4, 16.0, 48.0},
      {2, 16.0, 40.0},
      {2, 8.0, 20.0},
      {1, 10.0, 20.0},
      {1, 5.0, 10.0},
      {1, 2.0, 4.0},
  }};
  if (quality < kMinQuality || quality > kMaxQuality) {
    throw Error(ErrorCode::InvalidArgument, "quality tier must be in [1, 10]");
  }
  return kTiers[quality - 1];
}

uint16_t crc16(std::span<const uint8_t> bytes) {
  uint16_t crc = 0xffff;
  for (uint8_t b : bytes) {
    crc ^= static_cast<uint16_t>(b) << 8;
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<uint16_t>((crc << 1) ^ 0x1021) : static_cast<uint16_t>(crc << 1);
    }
  }
  return crc;
}

namespace {

constexpr int kBlock = 8;
constexpr int kCoefs = 64;
constexpr int kBlockAlphabet = 32;  // 0..15 DC category, 16..31 skip-run category 1..16
constexpr int kAcAlphabet = 256;    // (run << 4) | size, 0x00 = EOB, 0xF0 = ZRL
constexpr int kEob = 0x00;
constexpr int kZrl = 0xF0;
constexpr uint32_t kMaxSkipRun = (1u << 16) - 1;
constexpr std::size_t kHeaderBytes = 5;
constexpr std::size_t kTrailerBytes = 2;

constexpr std::array<int, kCoefs> kZigZag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

struct DctBasis {
  std::array<double, kCoefs> m{}; // m[k * 8 + n]
  DctBasis() {
    for (int k = 0; k < kBlock; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int n = 0; n < kBlock; ++n) {
        m[k * kBlock + n] = scale * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * kBlock));
      }
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

void forwardDct(const double* in, double* out) {
  const auto& m = basis().m;
  std::array<double, kCoefs> tmp{};
  for (int y = 0; y < kBlock; ++y) {
    for (int k = 0; k < kBlock; ++k) {
      double acc = 0.0;
      for (int n = 0; n < kBlock; ++n) acc += m[k * kBlock + n] * in[y * kBlock + n];
      tmp[y * kBlock + k] = acc;
    }
  }
  for (int k = 0; k < kBlock; ++k) {
    for (int x = 0; x < kBlock; ++x) {
      double acc = 0.0;
      for (int n = 0; n < kBlock; ++n) acc += m[k * kBlock + n] * tmp[n * kBlock + x];
      out[k * kBlock + x] = acc;
    }
  }
}

void inverseDct(const double* in, double* out) {
  const auto& m = basis().m;
  std::array<double, kCoefs> tmp{};
  for (int n = 0; n < kBlock; ++n) {
    for (int x = 0; x < kBlock; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kBlock; ++k) acc += m[k * kBlock + n] * in[k * kBlock + x];
      tmp[n * kBlock + x] = acc;
    }
  }
  for (int y = 0; y < kBlock; ++y) {
    for (int n = 0; n < kBlock; ++n) {
      double acc = 0.0;
      for (int k = 0; k < kBlock; ++k) acc += m[k * kBlock + n] * tmp[y * kBlock + k];
      out[y * kBlock + n] = acc;
    }
  }
}

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

// Y is level-shifted by -128 so all three planes are roughly zero-centred.
std::array<Plane, 3> toYCoCg(const Image& img) {
  std::array<Plane, 3> p;
  for (auto& pl : p) {
    pl.width = img.width();
    pl.height = img.height();
    pl.v.resize(img.pixelCount());
  }
  const auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < img.pixelCount(); ++i) {
    p[0].v[i] = 0.25 * r[i] + 0.5 * g[i] + 0.25 * b[i] - 128.0;
    p[1].v[i] = 0.5 * r[i] - 0.5 * b[i];
    p[2].v[i] = -0.25 * r[i] + 0.5 * g[i] - 0.25 * b[i];
  }
  return p;
}

Image fromYCoCg(const std::array<Plane, 3>& p) {
  Image img(p[0].width, p[0].height);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (std::size_t i = 0; i < img.pixelCount(); ++i) {
    const double y = p[0].v[i] + 128.0, co = p[1].v[i], cg = p[2].v[i];
    r[i] = toSample(y + co - cg);
    g[i] = toSample(y + cg);
    b[i] = toSample(y - co - cg);
  }
  return img;
}

// YCoCg conversion fused with box downsampling; the averages accumulate in
// the same order as converting first and downsampling after.
std::array<Plane, 3> toYCoCgDownsampled(const Image& img, int factor) {
  if (factor == 1) return toYCoCg(img);
  std::array<Plane, 3> out;
  const int ow = (img.width() + factor - 1) / factor;
  const int oh = (img.height() + factor - 1) / factor;
  for (auto& pl : out) {
    pl.width = ow;
    pl.height = oh;
    pl.v.resize(static_cast<std::size_t>(ow) * oh);
  }
  const auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      std::array<double, 3> acc{};
      int n = 0;
      for (int sy = y * factor; sy < std::min(img.height(), (y + 1) * factor); ++sy) {
        for (int sx = x * factor; sx < std::min(img.width(), (x + 1) * factor); ++sx) {
          const std::size_t i = static_cast<std::size_t>(sy) * img.width() + sx;
          acc[0] += 0.25 * r[i] + 0.5 * g[i] + 0.25 * b[i] - 128.0;
          acc[1] += 0.5 * r[i] - 0.5 * b[i];
          acc[2] += -0.25 * r[i] + 0.5 * g[i] - 0.25 * b[i];
          ++n;
        }
      }
      for (int c = 0; c < 3; ++c) out[c].at(x, y) = acc[c] / n;
    }
  }
  return out;
}

// Bilinear upsampling (sample centres at (i + 0.5) * factor - 0.5) fused
// with the YCoCg to RGB conversion, one output row at a time.
Image upsampleToRgb(const std::array<Plane, 3>& low, int factor, int width, int height) {
  if (factor == 1) return fromYCoCg(low);
  auto coord = [&](int i, int limit, int& i0, int& i1, double& t) {
    double u = (i + 0.5) / factor - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(limit - 1));
    i0 = static_cast<int>(std::floor(u));
    i1 = std::min(i0 + 1, limit - 1);
    t = u - i0;
  };
  // Horizontal pass once per low-resolution row.
  std::array<std::vector<double>, 3> rows;
  for (int c = 0; c < 3; ++c) {
    const Plane& in = low[c];
    rows[c].resize(static_cast<std::size_t>(in.height) * width);
    for (int x = 0; x < width; ++x) {
      int x0, x1;
      double tx;
      coord(x, in.width, x0, x1, tx);
      for (int y = 0; y < in.height; ++y) {
        rows[c][static_cast<std::size_t>(y) * width + x] = in.at(x0, y) * (1 - tx) + in.at(x1, y) * tx;
      }
    }
  }
  Image img(width, height);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  std::array<std::vector<double>, 3> line;
  for (auto& l : line) l.resize(width);
  for (int y = 0; y < height; ++y) {
    for (int c = 0; c < 3; ++c) {
      int y0, y1;
      double ty;
      coord(y, low[c].height, y0, y1, ty);
      const double* top = rows[c].data() + static_cast<std::size_t>(y0) * width;
      const double* bottom = rows[c].data() + static_cast<std::size_t>(y1) * width;
      double* dst = line[c].data();
      for (int x = 0; x < width; ++x) dst[x] = top[x] * (1 - ty) + bottom[x] * ty;
    }
    const std::size_t base = static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      const double yy = line[0][x] + 128.0, co = line[1][x], cg = line[2][x];
      r[base + x] = toSample(yy + co - cg);
      g[base + x] = toSample(yy + cg);
      b[base + x] = toSample(yy - co - cg);
    }
  }
  return img;
}

int category(int v) {
  int a = std::abs(v), c = 0;
  while (a) {
    ++c;
    a >>= 1;
  }
  return c;
}

uint32_t magnitudeBits(int v, int cat) {
  return v >= 0 ? static_cast<uint32_t>(v) : static_cast<uint32_t>(v + (1 << cat) - 1);
}

int fromMagnitudeBits(uint32_t bits, int cat) {
  if (cat == 0) return 0;
  if (bits >> (cat - 1)) return static_cast<int>(bits);
  return static_cast<int>(bits) - (1 << cat) + 1;
}

struct Symbol {
  bool acTable;
  int code;
  uint32_t extra;
  int extraBits;
};

struct Layout {
  int dsWidth, dsHeight, blocksX, blocksY;
};

Layout layoutFor(int width, int height, int factor) {
  Layout l{};
  l.dsWidth = (width + factor - 1) / factor;
  l.dsHeight = (height + factor - 1) / factor;
  l.blocksX = (l.dsWidth + kBlock - 1) / kBlock;
  l.blocksY = (l.dsHeight + kBlock - 1) / kBlock;
  return l;
}

[[noreturn]] void fail(const std::string& segment, const std::string& what, std::size_t offset) {
  throw Error(ErrorCode::CodecError, "segment '" + segment + "' at byte " + std::to_string(offset) +
                                         ": " + what,
              static_cast<int64_t>(offset));
}

} // namespace

std::vector<uint8_t> ReferenceCodec::encode(const Image& image, int quality) const {
  const QualityTier tier = qualityTier(quality);
  if (image.empty() || image.width() > 0xffff || image.height() > 0xffff) {
    throw Error(ErrorCode::InvalidArgument, "image size not encodable");
  }
  const Layout lay = layoutFor(image.width(), image.height(), tier.downsample);
  const auto planes = toYCoCgDownsampled(image, tier.downsample);

  std::vector<Symbol> symbols;
  std::vector<uint64_t> freqA(kBlockAlphabet, 0), freqB(kAcAlphabet, 0);
  uint32_t pendingSkip = 0;
  auto flushSkip = [&]() {
    while (pendingSkip > 0) {
      const uint32_t n = std::min(pendingSkip, kMaxSkipRun);
      const int cat = category(static_cast<int>(n));
      symbols.push_back({false, 15 + cat, n & ((1u << (cat - 1)) - 1), cat - 1});
      ++freqA[15 + cat];
      pendingSkip -= n;
    }
  };

  std::array<double, kCoefs> block{}, coef{};
  for (int c = 0; c < kChannels; ++c) {
    const Plane& ds = planes[c];
    const double step = c == 0 ? tier.lumaStep : tier.chromaStep;
    int prevDc = 0;
    for (int by = 0; by < lay.blocksY; ++by) {
      for (int bx = 0; bx < lay.blocksX; ++bx) {
        for (int y = 0; y < kBlock; ++y) {
          for (int x = 0; x < kBlock; ++x) {
            const int sx = std::min(bx * kBlock + x, ds.width - 1);
            const int sy = std::min(by * kBlock + y, ds.height - 1);
            block[y * kBlock + x] = ds.at(sx, sy);
          }
        }
        forwardDct(block.data(), coef.data());
        std::array<int, kCoefs> q{};
        for (int i = 0; i < kCoefs; ++i) {
          q[i] = static_cast<int>(std::round(coef[kZigZag[i]] / step));
        }
        const int dcDiff = q[0] - prevDc;
        prevDc = q[0];
        const bool anyAc = std::any_of(q.begin() + 1, q.end(), [](int v) { return v != 0; });
        if (dcDiff == 0 && !anyAc) {
          ++pendingSkip;
          continue;
        }
        flushSkip();
        const int dcCat = category(dcDiff);
        symbols.push_back({false, dcCat, magnitudeBits(dcDiff, dcCat), dcCat});
        ++freqA[dcCat];
        int run = 0;
        int last = kCoefs - 1;
        while (last > 0 && q[last] == 0) --last;
        for (int i = 1; i <= last; ++i) {
          if (q[i] == 0) {
            ++run;
            continue;
          }
          while (run > 15) {
            symbols.push_back({true, kZrl, 0, 0});
            ++freqB[kZrl];
            run -= 16;
          }
          const int cat = category(q[i]);
          if (cat > 15) {
            throw Error(ErrorCode::CodecError, "coefficient magnitude out of range");
          }
          const int code = (run << 4) | cat;
          symbols.push_back({true, code, magnitudeBits(q[i], cat), cat});
          ++freqB[code];
          run = 0;
        }
        if (last < kCoefs - 1) {
          symbols.push_back({true, kEob, 0, 0});
          ++freqB[kEob];
        }
      }
    }
  }
  flushSkip();

  const auto tableA = CanonicalHuffman::fromFrequencies(freqA);
  const auto tableB = CanonicalHuffman::fromFrequencies(freqB);

  BitWriter bits;
  tableA.writeTable(bits, 6);
  tableB.writeTable(bits, 9);
  for (const Symbol& s : symbols) {
    (s.acTable ? tableB : tableA).encode(bits, s.code);
    if (s.extraBits > 0) bits.put(s.extra, s.extraBits);
  }
  const auto body = bits.finish();

  std::vector<uint8_t> out;
  out.reserve(kHeaderBytes + body.size() + kTrailerBytes);
  out.push_back(static_cast<uint8_t>(0xA0 | quality));
  out.push_back(static_cast<uint8_t>(image.width() >> 8));
  out.push_back(static_cast<uint8_t>(image.width() & 0xff));
  out.push_back(static_cast<uint8_t>(image.height() >> 8));
  out.push_back(static_cast<uint8_t>(image.height() & 0xff));
  out.insert(out.end(), body.begin(), body.end());
  const uint16_t crc = crc16(out);
  out.push_back(static_cast<uint8_t>(crc >> 8));
  out.push_back(static_cast<uint8_t>(crc & 0xff));
  return out;
}

Image ReferenceCodec::decode(std::span<const uint8_t> bytes) const {
  if (bytes.size() < kHeaderBytes + kTrailerBytes) {
    fail("header", "stream truncated", bytes.size());
  }
  const std::size_t bodyEnd = bytes.size() - kTrailerBytes;
  const uint16_t stored = static_cast<uint16_t>((bytes[bodyEnd] << 8) | bytes[bodyEnd + 1]);
  if (crc16(bytes.first(bodyEnd)) != stored) {
    fail("checksum", "CRC mismatch", bodyEnd);
  }
  if ((bytes[0] & 0xf0) != 0xA0) {
    fail("header", "bad magic", 0);
  }
  const int quality = bytes[0] & 0x0f;
  if (quality < kMinQuality || quality > kMaxQuality) {
    fail("header", "bad quality tier", 0);
  }
  const int width = (bytes[1] << 8) | bytes[2];
  const int height = (bytes[3] << 8) | bytes[4];
  if (width < 1 || height < 1 || width > kMaxFrameSide || height > kMaxFrameSide) {
    fail("header", "bad dimensions", 1);
  }
  const QualityTier tier = qualityTier(quality);
  const Layout lay = layoutFor(width, height, tier.downsample);

  const auto body = bytes.subspan(kHeaderBytes, bodyEnd - kHeaderBytes);
  BitReader in(body);
  auto offset = [&]() { return kHeaderBytes + in.bytePosition(); };
  const auto tableA = CanonicalHuffman::readTable(in, kBlockAlphabet, 6);
  if (!tableA) fail("tables", "invalid block-symbol table", offset());
  const auto tableB = CanonicalHuffman::readTable(in, kAcAlphabet, 9);
  if (!tableB) fail("tables", "invalid coefficient table", offset());

  std::array<Plane, 3> planes;
  const long totalBlocks = 3L * lay.blocksX * lay.blocksY;
  long blockIndex = 0;
  uint32_t skipRemaining = 0;
  std::array<double, kCoefs> coef{}, pix{};
  for (int c = 0; c < kChannels; ++c) {
    Plane ds;
    ds.width = lay.blocksX * kBlock;
    ds.height = lay.blocksY * kBlock;
    ds.v.assign(static_cast<std::size_t>(ds.width) * ds.height, 0.0);
    const double step = c == 0 ? tier.lumaStep : tier.chromaStep;
    int prevDc = 0;
    for (int by = 0; by < lay.blocksY; ++by) {
      for (int bx = 0; bx < lay.blocksX; ++bx, ++blockIndex) {
        std::array<int, kCoefs> q{};
        bool coded = false;
        if (skipRemaining == 0) {
          const auto sym = tableA->empty() ? std::nullopt : tableA->decode(in);
          if (!sym) fail("blocks", "truncated or invalid block symbol", offset());
          uint32_t extra = 0;
          if (*sym >= 16) {
            const int cat = *sym - 15;
            if (cat - 1 > 0 && !in.get(cat - 1, extra)) fail("blocks", "truncated skip run", offset());
            const uint32_t n = (1u << (cat - 1)) | extra;
            if (static_cast<long>(n) > totalBlocks - blockIndex) {
              fail("blocks", "skip run past end of frame", offset());
            }
            skipRemaining = n;
          } else {
            const int cat = *sym;
            if (cat > 0 && !in.get(cat, extra)) fail("blocks", "truncated DC value", offset());
            q[0] = prevDc + fromMagnitudeBits(extra, cat);
            coded = true;
            int i = 1;
            while (i < kCoefs) {
              const auto ac = tableB->empty() ? std::nullopt : tableB->decode(in);
              if (!ac) fail("blocks", "truncated or invalid coefficient symbol", offset());
              if (*ac == kEob) break;
              const int run = *ac >> 4, size = *ac & 0x0f;
              if (size == 0 && *ac != kZrl) fail("blocks", "invalid coefficient symbol", offset());
              i += run;
              if (i >= kCoefs || (size == 0 && i + 1 > kCoefs)) {
                fail("blocks", "coefficient run overflows block", offset());
              }
              if (size == 0) {
                ++i;
                continue;
              }
              uint32_t mag = 0;
              if (!in.get(size, mag)) fail("blocks", "truncated coefficient", offset());
              q[i++] = fromMagnitudeBits(mag, size);
            }
          }
        }
        if (!coded) {
          --skipRemaining;
          q[0] = prevDc;
        }
        prevDc = q[0];
        coef.fill(0.0);
        for (int i = 0; i < kCoefs; ++i) coef[kZigZag[i]] = q[i] * step;
        inverseDct(coef.data(), pix.data());
        for (int y = 0; y < kBlock; ++y) {
          for (int x = 0; x < kBlock; ++x) {
            ds.at(bx * kBlock + x, by * kBlock + y) = pix[y * kBlock + x];
          }
        }
      }
    }
    Plane cropped;
    cropped.width = lay.dsWidth;
    cropped.height = lay.dsHeight;
    cropped.v.resize(static_cast<std::size_t>(lay.dsWidth) * lay.dsHeight);
    for (int y = 0; y < lay.dsHeight; ++y) {
      for (int x = 0; x < lay.dsWidth; ++x) cropped.at(x, y) = ds.at(x, y);
    }
    planes[c] = std::move(cropped);
  }
  if (skipRemaining != 0) {
    fail("blocks", "skip run past end of frame", offset());
  }
  // Only zero padding may follow the last symbol.
  const std::size_t used = in.bitPosition();
  if ((used + 7) / 8 != body.size()) {
    fail("trailer", "unexpected bytes after block data", offset());
  }
  uint32_t pad = 0;
  if (!in.get(static_cast<int>(body.size() * 8 - used), pad) || pad != 0) {
    fail("trailer", "non-zero padding", offset());
  }
  return upsampleToRgb(planes, tier.downsample, width, height);
}

} // namespace faiv
