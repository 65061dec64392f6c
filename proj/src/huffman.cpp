#include "huffman.hpp"

#include <algorithm>
#include <numeric>

namespace faiv::detail {

namespace {

std::vector<uint8_t> buildLengths(const std::vector<uint64_t>& freq) {
  struct Node {
    uint64_t weight;
    int order;
    int left;
    int right;
  };
  std::vector<Node> nodes;
  std::vector<int> live;
  for (std::size_t s = 0; s < freq.size(); ++s) {
    if (freq[s] > 0) {
      nodes.push_back({freq[s], static_cast<int>(s), -1, -1});
      live.push_back(static_cast<int>(nodes.size()) - 1);
    }
  }
  std::vector<uint8_t> lengths(freq.size(), 0);
  if (live.empty()) {
    return lengths;
  }
  if (live.size() == 1) {
    lengths[nodes[live[0]].order] = 1;
    return lengths;
  }
  int nextOrder = static_cast<int>(freq.size());
  auto less = [&](int a, int b) {
    if (nodes[a].weight != nodes[b].weight) return nodes[a].weight < nodes[b].weight;
    return nodes[a].order < nodes[b].order;
  };
  while (live.size() > 1) {
    std::sort(live.begin(), live.end(), less);
    const int a = live[0], b = live[1];
    nodes.push_back({nodes[a].weight + nodes[b].weight, nextOrder++, a, b});
    live.erase(live.begin(), live.begin() + 2);
    live.push_back(static_cast<int>(nodes.size()) - 1);
  }
  // Depth-first depth assignment.
  std::vector<std::pair<int, int>> stack{{live[0], 0}};
  while (!stack.empty()) {
    auto [n, depth] = stack.back();
    stack.pop_back();
    if (nodes[n].left < 0) {
      lengths[nodes[n].order] = static_cast<uint8_t>(std::min(depth, 255));
    } else {
      stack.push_back({nodes[n].left, depth + 1});
      stack.push_back({nodes[n].right, depth + 1});
    }
  }
  return lengths;
}

} // namespace

CanonicalHuffman CanonicalHuffman::fromFrequencies(const std::vector<uint64_t>& freq) {
  std::vector<uint64_t> f = freq;
  for (;;) {
    auto lengths = buildLengths(f);
    if (*std::max_element(lengths.begin(), lengths.end()) <= kMaxCodeLength) {
      return fromLengths(std::move(lengths));
    }
    for (auto& v : f) {
      if (v > 0) v = std::max<uint64_t>(1, v / 2);
    }
  }
}

CanonicalHuffman CanonicalHuffman::fromLengths(std::vector<uint8_t> lengths) {
  CanonicalHuffman h;
  h.lengths_ = std::move(lengths);
  h.assignCodes();
  return h;
}

void CanonicalHuffman::assignCodes() {
  codes_.assign(lengths_.size(), 0);
  firstCode_.assign(kMaxCodeLength + 2, 0);
  firstIndex_.assign(kMaxCodeLength + 2, 0);
  countPerLength_.assign(kMaxCodeLength + 2, 0);
  sortedSymbols_.clear();
  used_ = 0;
  for (std::size_t s = 0; s < lengths_.size(); ++s) {
    if (lengths_[s] > 0) {
      ++countPerLength_[lengths_[s]];
      ++used_;
    }
  }
  for (int len = 1; len <= kMaxCodeLength; ++len) {
    for (std::size_t s = 0; s < lengths_.size(); ++s) {
      if (lengths_[s] == len) sortedSymbols_.push_back(static_cast<int>(s));
    }
  }
  uint32_t code = 0;
  int index = 0;
  for (int len = 1; len <= kMaxCodeLength; ++len) {
    firstCode_[len] = code;
    firstIndex_[len] = index;
    for (int i = 0; i < countPerLength_[len]; ++i) {
      codes_[sortedSymbols_[index + i]] = code + static_cast<uint32_t>(i);
    }
    code = (code + static_cast<uint32_t>(countPerLength_[len])) << 1;
    index += countPerLength_[len];
  }
}

void CanonicalHuffman::encode(BitWriter& out, int symbol) const {
  out.put(codes_[symbol], lengths_[symbol]);
}

std::optional<int> CanonicalHuffman::decode(BitReader& in) const {
  uint32_t code = 0;
  for (int len = 1; len <= kMaxCodeLength; ++len) {
    uint32_t bit;
    if (!in.get(1, bit)) return std::nullopt;
    code = (code << 1) | bit;
    const int count = countPerLength_[len];
    if (count > 0 && code >= firstCode_[len] && code < firstCode_[len] + static_cast<uint32_t>(count)) {
      return sortedSymbols_[firstIndex_[len] + static_cast<int>(code - firstCode_[len])];
    }
  }
  return std::nullopt;
}

namespace {

// Exp-Golomb order 0.
void putGolomb(BitWriter& out, uint32_t v) {
  const uint32_t x = v + 1;
  int n = 0;
  while ((x >> (n + 1)) != 0) ++n;
  out.put(0, n);
  out.put(x, n + 1);
}

bool getGolomb(BitReader& in, uint32_t& v) {
  int zeros = 0;
  uint32_t bit = 0;
  while (true) {
    if (!in.get(1, bit)) return false;
    if (bit) break;
    if (++zeros > 16) return false;
  }
  uint32_t rest = 0;
  if (zeros > 0 && !in.get(zeros, rest)) return false;
  v = ((1u << zeros) | rest) - 1;
  return true;
}

} // namespace

// Used symbols in ascending order, each as the Exp-Golomb gap to the previous
// one followed by its code length - 1 in 4 bits.
void CanonicalHuffman::writeTable(BitWriter& out, int countBits) const {
  out.put(static_cast<uint32_t>(used_), countBits);
  int previous = -1;
  for (std::size_t s = 0; s < lengths_.size(); ++s) {
    if (lengths_[s] > 0) {
      putGolomb(out, static_cast<uint32_t>(static_cast<int>(s) - previous - 1));
      out.put(static_cast<uint32_t>(lengths_[s] - 1), 4);
      previous = static_cast<int>(s);
    }
  }
}

std::optional<CanonicalHuffman> CanonicalHuffman::readTable(BitReader& in, int alphabetSize,
                                                            int countBits) {
  uint32_t count;
  if (!in.get(countBits, count) || count > static_cast<uint32_t>(alphabetSize)) {
    return std::nullopt;
  }
  std::vector<uint8_t> lengths(alphabetSize, 0);
  int64_t previous = -1;
  double kraft = 0.0;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t gap, len;
    if (!getGolomb(in, gap) || !in.get(4, len)) return std::nullopt;
    const int64_t symbol = previous + 1 + gap;
    if (symbol >= alphabetSize) {
      return std::nullopt;
    }
    previous = symbol;
    lengths[static_cast<std::size_t>(symbol)] = static_cast<uint8_t>(len + 1);
    kraft += 1.0 / static_cast<double>(1u << (len + 1));
  }
  if (kraft > 1.0) {
    return std::nullopt;
  }
  return fromLengths(std::move(lengths));
}

} // namespace faiv::detail
