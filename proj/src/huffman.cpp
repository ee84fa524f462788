#include "rdae/huffman.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <string>
#include <tuple>

#include "rdae/error.hpp"

namespace rdae {
namespace {

// Code lengths of an optimal prefix code. Ties between equal weights are
// broken by node creation order so the result is deterministic.
std::array<std::uint8_t, HuffmanTable::kSymbols> huffman_lengths(
    const std::array<std::uint64_t, HuffmanTable::kSymbols>& weights) {
  struct Node {
    int left = -1;
    int right = -1;
  };
  std::vector<Node> nodes;
  using Entry = std::tuple<std::uint64_t, int>;  // (weight, node id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  std::vector<int> leaf_symbol;
  for (int s = 0; s < HuffmanTable::kSymbols; ++s) {
    if (weights[s] == 0) continue;
    nodes.push_back({});
    leaf_symbol.push_back(s);
    heap.emplace(weights[s], static_cast<int>(nodes.size()) - 1);
  }
  std::array<std::uint8_t, HuffmanTable::kSymbols> lengths{};
  if (nodes.size() == 1) {
    lengths[leaf_symbol[0]] = 1;
    return lengths;
  }
  const int leaves = static_cast<int>(nodes.size());
  while (heap.size() > 1) {
    auto [wa, a] = heap.top();
    heap.pop();
    auto [wb, b] = heap.top();
    heap.pop();
    nodes.push_back({a, b});
    heap.emplace(wa + wb, static_cast<int>(nodes.size()) - 1);
  }
  // Depth-first walk from the root.
  std::vector<std::pair<int, int>> stack{{static_cast<int>(nodes.size()) - 1, 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    if (id < leaves) {
      lengths[leaf_symbol[id]] = static_cast<std::uint8_t>(std::min(depth, 255));
      continue;
    }
    stack.emplace_back(nodes[id].left, depth + 1);
    stack.emplace_back(nodes[id].right, depth + 1);
  }
  return lengths;
}

}  // namespace

HuffmanTable HuffmanTable::build(std::span<const std::uint64_t> hist) {
  if (hist.size() != kSymbols) {
    throw Error(Errc::kInvalidArg, "huffman histogram must have 256 bins");
  }
  std::array<std::uint64_t, kSymbols> weights{};
  std::copy(hist.begin(), hist.end(), weights.begin());
  if (std::all_of(weights.begin(), weights.end(), [](auto w) { return w == 0; })) {
    throw Error(Errc::kInvalidArg, "huffman histogram is empty");
  }
  HuffmanTable t;
  for (;;) {
    t.lengths_ = huffman_lengths(weights);
    if (*std::max_element(t.lengths_.begin(), t.lengths_.end()) <= kMaxLength) break;
    // Too deep: flatten the distribution and rebuild. Present symbols stay
    // present.
    for (auto& w : weights) {
      if (w) w = (w >> 1) | 1;
    }
  }
  t.assign_codes();
  return t;
}

HuffmanTable HuffmanTable::from_lengths(std::span<const std::uint8_t> lengths) {
  if (lengths.size() != kSymbols) {
    throw Error(Errc::kFormat, "huffman table must list 256 code lengths");
  }
  HuffmanTable t;
  int present = 0;
  for (int s = 0; s < kSymbols; ++s) {
    if (lengths[s] > kMaxLength) {
      throw Error(Errc::kFormat, "huffman code length " + std::to_string(lengths[s]) +
                                     " exceeds " + std::to_string(kMaxLength));
    }
    t.lengths_[s] = lengths[s];
    present += lengths[s] != 0;
  }
  if (present == 0) throw Error(Errc::kFormat, "huffman table has no symbols");
  const std::uint64_t kraft = t.kraft_sum_scaled();
  const bool single = present == 1 && kraft == (1ull << 31);
  if (!single && kraft != (1ull << 32)) {
    throw Error(Errc::kFormat, "huffman code lengths do not form a complete prefix code");
  }
  t.assign_codes();
  return t;
}

void HuffmanTable::assign_codes() {
  count_.fill(0);
  for (auto len : lengths_) {
    if (len) ++count_[len];
  }
  sorted_symbols_.clear();
  for (int len = 1; len <= kMaxLength; ++len)
    for (int s = 0; s < kSymbols; ++s)
      if (lengths_[s] == len) sorted_symbols_.push_back(static_cast<std::uint8_t>(s));

  std::uint64_t code = 0;
  std::uint32_t index = 0;
  for (int len = 1; len <= kMaxLength; ++len) {
    code = (code + (len > 1 ? count_[len - 1] : 0)) << (len > 1 ? 1 : 0);
    first_code_[len] = code;
    first_index_[len] = index;
    index += count_[len];
  }
  codes_.fill(0);
  for (int len = 1; len <= kMaxLength; ++len) {
    for (std::uint32_t i = 0; i < count_[len]; ++i) {
      codes_[sorted_symbols_[first_index_[len] + i]] =
          static_cast<std::uint32_t>(first_code_[len] + i);
    }
  }
}

std::uint64_t HuffmanTable::kraft_sum_scaled() const noexcept {
  std::uint64_t sum = 0;
  for (auto len : lengths_) {
    if (len) sum += 1ull << (kMaxLength - len);
  }
  return sum;
}

double HuffmanTable::mean_code_length(std::span<const std::uint64_t> hist) const {
  double bits = 0;
  double total = 0;
  for (std::size_t s = 0; s < hist.size() && s < kSymbols; ++s) {
    bits += static_cast<double>(hist[s]) * lengths_[s];
    total += static_cast<double>(hist[s]);
  }
  return total > 0 ? bits / total : 0.0;
}

std::array<std::uint64_t, HuffmanTable::kSymbols> histogram(std::span<const std::uint8_t> symbols) {
  std::array<std::uint64_t, HuffmanTable::kSymbols> h{};
  for (auto s : symbols) ++h[s];
  return h;
}

std::vector<std::uint8_t> huffman_encode(std::span<const std::uint8_t> symbols,
                                         const HuffmanTable& table) {
  std::vector<std::uint8_t> out;
  std::uint64_t acc = 0;
  int filled = 0;
  for (auto s : symbols) {
    const int len = table.length(s);
    if (len == 0) {
      throw Error(Errc::kSymbol, "huffman encode: symbol " + std::to_string(s) +
                                     " has no code in the table");
    }
    acc = (acc << len) | table.code(s);
    filled += len;
    while (filled >= 8) {
      filled -= 8;
      out.push_back(static_cast<std::uint8_t>(acc >> filled));
    }
    acc &= (1ull << filled) - 1;
  }
  if (filled > 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - filled)));
  return out;
}

std::vector<std::uint8_t> huffman_decode(std::span<const std::uint8_t> bits,
                                         const HuffmanTable& table, std::size_t count) {
  std::vector<std::uint8_t> out;
  out.reserve(count);
  const std::size_t total_bits = bits.size() * 8;
  std::size_t pos = 0;
  while (out.size() < count) {
    std::uint64_t code = 0;
    bool matched = false;
    for (int len = 1; len <= HuffmanTable::kMaxLength; ++len) {
      if (pos >= total_bits) {
        throw Error(Errc::kTruncated, "huffman payload ends after " +
                                          std::to_string(out.size()) + " of " +
                                          std::to_string(count) + " symbols");
      }
      code = (code << 1) | ((bits[pos >> 3] >> (7 - (pos & 7))) & 1u);
      ++pos;
      const std::uint64_t first = table.first_code_[len];
      if (code >= first && code - first < table.count_[len]) {
        out.push_back(table.sorted_symbols_[table.first_index_[len] + (code - first)]);
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw Error(Errc::kFormat, "huffman payload contains an invalid code at bit " +
                                     std::to_string(pos));
    }
  }
  if ((pos + 7) / 8 != bits.size()) {
    throw Error(Errc::kFormat, "huffman payload has " +
                                   std::to_string(bits.size() - (pos + 7) / 8) +
                                   " unused trailing bytes");
  }
  return out;
}

}  // namespace rdae
