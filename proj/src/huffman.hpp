#pragma once

#include "bit_io.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace faiv::detail {

inline constexpr int kMaxCodeLength = 15;

/// Canonical Huffman code over symbols [0, alphabetSize). Codes are assigned
/// in (length, symbol) order.
class CanonicalHuffman {
public:
  CanonicalHuffman() = default;

  /// Lengths from symbol frequencies, limited to kMaxCodeLength. A single
  /// used symbol gets length 1.
  static CanonicalHuffman fromFrequencies(const std::vector<uint64_t>& freq);
  static CanonicalHuffman fromLengths(std::vector<uint8_t> lengths);

  const std::vector<uint8_t>& lengths() const noexcept { return lengths_; }
  bool empty() const noexcept { return used_ == 0; }

  void encode(BitWriter& out, int symbol) const;
  /// nullopt on truncated input or an invalid code.
  std::optional<int> decode(BitReader& in) const;

  /// Table layout: used-symbol count (countBits), then per used symbol in
  /// ascending order the Exp-Golomb gap from the previous one and length-1
  /// in 4 bits.
  void writeTable(BitWriter& out, int countBits) const;
  static std::optional<CanonicalHuffman> readTable(BitReader& in, int alphabetSize, int countBits);

private:
  void assignCodes();

  std::vector<uint8_t> lengths_;
  std::vector<uint32_t> codes_;
  int used_ = 0;
  // Canonical decode tables, indexed by length.
  std::vector<uint32_t> firstCode_;
  std::vector<int> firstIndex_;
  std::vector<int> countPerLength_;
  std::vector<int> sortedSymbols_;
};

} // namespace faiv::detail
