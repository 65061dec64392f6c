#include "faiv/image_io.hpp"

#include "faiv/error.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

namespace faiv {

namespace {

constexpr char kRawMagic[8] = {'F', 'A', 'I', 'V', 'R', 'A', 'W', '1'};

void putU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t getU32(std::span<const uint8_t> b, std::size_t at) {
  return (uint32_t{b[at]} << 24) | (uint32_t{b[at + 1]} << 16) | (uint32_t{b[at + 2]} << 8) |
         uint32_t{b[at + 3]};
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr openFile(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  return f;
}

} // namespace

std::vector<uint8_t> encodeRaw(const Image& image) {
  std::vector<uint8_t> out(kRawMagic, kRawMagic + 8);
  putU32(out, static_cast<uint32_t>(image.width()));
  putU32(out, static_cast<uint32_t>(image.height()));
  for (int c = 0; c < kChannels; ++c) {
    const auto p = image.plane(c);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

Image decodeRaw(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16) {
    throw Error(ErrorCode::ParseError, "raw frame header truncated", static_cast<int64_t>(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kRawMagic, 8) != 0) {
    throw Error(ErrorCode::ParseError, "bad raw frame magic", 0);
  }
  const uint32_t w = getU32(bytes, 8), h = getU32(bytes, 12);
  if (w < 1 || h < 1 || w > kMaxFrameSide || h > kMaxFrameSide) {
    throw Error(ErrorCode::ParseError, "raw frame dimensions out of range", 8);
  }
  const std::size_t need = 16 + std::size_t{w} * h * kChannels;
  if (bytes.size() != need) {
    throw Error(ErrorCode::ParseError, "raw frame length mismatch",
                static_cast<int64_t>(std::min(bytes.size(), need)));
  }
  Image img(static_cast<int>(w), static_cast<int>(h));
  std::size_t at = 16;
  for (int c = 0; c < kChannels; ++c) {
    auto p = img.plane(c);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(at), p.size(), p.begin());
    at += p.size();
  }
  return img;
}

void writePng(const std::filesystem::path& path, const Image& image) {
  FilePtr f = openFile(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  std::vector<uint8_t> row(static_cast<std::size_t>(image.width()) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < kChannels; ++c) row[static_cast<std::size_t>(x) * 3 + c] = image.at(c, x, y);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image readPng(const std::filesystem::path& path) {
  FilePtr f = openFile(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialisation failed");
  }
  Image img;
  std::vector<uint8_t> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "PNG read failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  img = Image(w, h);
  row.resize(png_get_rowbytes(png, info));
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < kChannels; ++c) img.at(c, x, y) = row[static_cast<std::size_t>(x) * 3 + c];
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<uint8_t> readFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void writeFileBytes(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::IoError, "write failed for " + path.string());
  }
}

} // namespace faiv
