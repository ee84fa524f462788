#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rdae/huffman.hpp"
#include "rdae/quantizer.hpp"

namespace rdae {

enum StreamFlag : std::uint8_t {
  kStreamHuffman = 1u << 0,
  kStreamAdditive = 1u << 1,
  kStreamWhitened = 1u << 2,
};

// Compressed image container. Byte layout (little-endian):
//   "RDAC" | version u8 | flags u8 | width u16 | height u16 | channels u8
//   | model CRC u32 | (min f32, scale f32) x2 | payload length u32 x2
//   | [256 code-length bytes x2 if Huffman] | LS1 payload | LS2 payload
//   | CRC-32 u32 over all preceding bytes
struct Bitstream {
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kFixedHeaderBytes = 4 + 1 + 1 + 2 + 2 + 1 + 4 + 16 + 8;
  static constexpr std::size_t kCrcBytes = 4;

  std::uint8_t version = kVersion;
  std::uint8_t flags = 0;
  std::uint16_t width = 128;
  std::uint16_t height = 128;
  std::uint8_t channels = 3;
  std::uint32_t model_crc = 0;
  std::array<QuantSpec, 2> quant{};
  std::array<std::vector<std::uint8_t>, 2> payload;
  // Present iff flags has kStreamHuffman.
  std::optional<std::array<HuffmanTable, 2>> tables;

  bool huffman() const noexcept { return flags & kStreamHuffman; }
  bool additive() const noexcept { return flags & kStreamAdditive; }
  bool whitened() const noexcept { return flags & kStreamWhitened; }

  friend bool operator==(const Bitstream&, const Bitstream&) = default;
};

std::vector<std::uint8_t> serialize(const Bitstream& stream);

// Checks run in this order: length floor, magic, version, declared length
// (a short stream names the first missing section), CRC, then field
// consistency. Every failure is an Error with kTruncated, kFormat, kVersion
// or kChecksum.
Bitstream parse_bitstream(std::span<const std::uint8_t> bytes);

struct StreamStats {
  std::size_t total_bytes = 0;
  std::size_t payload_bytes = 0;  // LS1 + LS2 payloads only
  double bpp = 0;                 // total bits / pixel count
  double compression_ratio = 0;   // source bits / total bits
  double payload_ratio = 0;       // source bits / payload bits
};

StreamStats stream_stats(const Bitstream& stream);

}  // namespace rdae
