#pragma once

#include "faiv/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace faiv {

/// Raw planar RGB: "FAIVRAW1", u32 width, u32 height (big endian), then the
/// R, G and B planes row-major.
std::vector<uint8_t> encodeRaw(const Image& image);
Image decodeRaw(std::span<const uint8_t> bytes);

void writePng(const std::filesystem::path& path, const Image& image);
Image readPng(const std::filesystem::path& path);

std::vector<uint8_t> readFileBytes(const std::filesystem::path& path);
void writeFileBytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);

} // namespace faiv
