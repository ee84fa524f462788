#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rdae {

// Canonical Huffman code over byte symbols. The table is fully described by
// its 256 code lengths (0 = symbol absent); codes are assigned in order of
// (length, symbol value).
class HuffmanTable {
 public:
  static constexpr int kSymbols = 256;
  static constexpr int kMaxLength = 32;

  // Optimal lengths for the histogram, limited to kMaxLength. A histogram
  // with a single present symbol gets a 1-bit code.
  static HuffmanTable build(std::span<const std::uint64_t> histogram);

  // Validates lengths (<= kMaxLength, at least one symbol, complete prefix
  // code or the single-symbol convention); throws Errc::kFormat otherwise.
  static HuffmanTable from_lengths(std::span<const std::uint8_t> lengths);

  const std::array<std::uint8_t, kSymbols>& lengths() const noexcept { return lengths_; }
  std::uint8_t length(std::uint8_t symbol) const noexcept { return lengths_[symbol]; }
  std::uint32_t code(std::uint8_t symbol) const noexcept { return codes_[symbol]; }

  // Sum of 2^-length over present symbols, scaled by 2^32.
  std::uint64_t kraft_sum_scaled() const noexcept;

  // Expected bits per symbol under the given histogram.
  double mean_code_length(std::span<const std::uint64_t> histogram) const;

  friend bool operator==(const HuffmanTable& a, const HuffmanTable& b) {
    return a.lengths_ == b.lengths_;
  }

 private:
  friend std::vector<std::uint8_t> huffman_decode(std::span<const std::uint8_t>,
                                                  const HuffmanTable&, std::size_t);

  void assign_codes();

  std::array<std::uint8_t, kSymbols> lengths_{};
  std::array<std::uint32_t, kSymbols> codes_{};
  // Canonical decoding tables, indexed by code length.
  std::array<std::uint32_t, kMaxLength + 1> count_{};
  std::array<std::uint64_t, kMaxLength + 1> first_code_{};
  std::array<std::uint32_t, kMaxLength + 1> first_index_{};
  std::vector<std::uint8_t> sorted_symbols_;
};

std::array<std::uint64_t, HuffmanTable::kSymbols> histogram(std::span<const std::uint8_t> symbols);

// MSB-first bit packing, final byte zero-padded. Throws Errc::kSymbol for a
// symbol without a code.
std::vector<std::uint8_t> huffman_encode(std::span<const std::uint8_t> symbols,
                                         const HuffmanTable& table);

// Decodes exactly `count` symbols. Throws Errc::kTruncated if the bits run
// out, Errc::kFormat on an invalid code or on unused trailing bytes.
std::vector<std::uint8_t> huffman_decode(std::span<const std::uint8_t> bits,
                                         const HuffmanTable& table, std::size_t count);

}  // namespace rdae
