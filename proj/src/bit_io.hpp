#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace faiv::detail {

/// MSB-first bit packer.
class BitWriter {
public:
  void put(uint32_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) {
      acc_ = static_cast<uint8_t>((acc_ << 1) | ((value >> i) & 1u));
      if (++fill_ == 8) {
        bytes_.push_back(acc_);
        acc_ = 0;
        fill_ = 0;
      }
    }
  }

  /// Pads the final byte with zero bits.
  std::vector<uint8_t> finish() {
    if (fill_ > 0) {
      bytes_.push_back(static_cast<uint8_t>(acc_ << (8 - fill_)));
      acc_ = 0;
      fill_ = 0;
    }
    return std::move(bytes_);
  }

  std::size_t bitCount() const noexcept { return bytes_.size() * 8 + fill_; }

private:
  std::vector<uint8_t> bytes_;
  uint8_t acc_ = 0;
  int fill_ = 0;
};

class BitReader {
public:
  explicit BitReader(std::span<const uint8_t> data) : data_(data) {}

  /// Returns false when the data is exhausted.
  bool get(int bits, uint32_t& value) {
    value = 0;
    for (int i = 0; i < bits; ++i) {
      if (pos_ >= data_.size() * 8) return false;
      const uint8_t byte = data_[pos_ / 8];
      value = (value << 1) | ((byte >> (7 - pos_ % 8)) & 1u);
      ++pos_;
    }
    return true;
  }

  std::size_t bitPosition() const noexcept { return pos_; }
  std::size_t bytePosition() const noexcept { return pos_ / 8; }

private:
  std::span<const uint8_t> data_;
  std::size_t pos_ = 0;
};

} // namespace faiv::detail
