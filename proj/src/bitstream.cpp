#include "rdae/bitstream.hpp"

#include <cstring>
#include <string>

#include "rdae/bytes.hpp"
#include "rdae/model.hpp"

namespace rdae {
namespace {

constexpr char kMagic[4] = {'R', 'D', 'A', 'C'};
constexpr std::uint8_t kKnownFlags = kStreamHuffman | kStreamAdditive | kStreamWhitened;

std::size_t serialized_size(const Bitstream& s) {
  return Bitstream::kFixedHeaderBytes + (s.huffman() ? 2 * HuffmanTable::kSymbols : 0) +
         s.payload[0].size() + s.payload[1].size() + Bitstream::kCrcBytes;
}

}  // namespace

std::vector<std::uint8_t> serialize(const Bitstream& s) {
  if (s.huffman() != s.tables.has_value()) {
    throw Error(Errc::kInvalidArg, "bitstream Huffman flag and tables disagree");
  }
  ByteWriter w;
  w.text(kMagic, 4);
  w.u8(s.version);
  w.u8(s.flags);
  w.u16(s.width);
  w.u16(s.height);
  w.u8(s.channels);
  w.u32(s.model_crc);
  for (const QuantSpec& q : s.quant) {
    w.f32(q.min);
    w.f32(q.scale);
  }
  for (const auto& p : s.payload) w.u32(static_cast<std::uint32_t>(p.size()));
  if (s.tables) {
    for (const HuffmanTable& t : *s.tables) w.bytes(t.lengths());
  }
  for (const auto& p : s.payload) w.bytes(p);
  w.u32(crc32(w.buffer()));
  return w.take();
}

Bitstream parse_bitstream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < Bitstream::kFixedHeaderBytes + Bitstream::kCrcBytes) {
    ByteReader probe(bytes);
    // Name the first section that is missing.
    probe.bytes(4, "stream magic");
    probe.u8("stream version");
    probe.u8("stream flags");
    probe.u16("stream width");
    probe.u16("stream height");
    probe.u8("stream channels");
    probe.u32("stream model CRC");
    probe.bytes(16, "quantizer parameters");
    probe.bytes(8, "payload lengths");
    probe.u32("stream CRC");
  }
  ByteReader r(bytes.first(bytes.size() - Bitstream::kCrcBytes));
  auto magic = r.bytes(4, "stream magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw Error(Errc::kFormat, "not a compressed stream (bad magic)");
  }
  Bitstream s;
  s.version = r.u8("stream version");
  if (s.version != Bitstream::kVersion) {
    throw Error(Errc::kVersion, "stream version " + std::to_string(s.version) +
                                    " is not supported (expected " +
                                    std::to_string(Bitstream::kVersion) + ")");
  }
  // Truncation is reported before the CRC so the message can name the first
  // missing section; the length fields it relies on are CRC-checked next.
  {
    ByteReader walk(bytes);
    walk.bytes(5, "stream magic");
    const bool huffman = walk.u8("stream flags") & kStreamHuffman;
    walk.bytes(2 + 2 + 1 + 4 + 16, "stream header");
    const std::uint32_t len1 = walk.u32("payload lengths");
    const std::uint32_t len2 = walk.u32("payload lengths");
    const std::uint64_t declared = Bitstream::kFixedHeaderBytes +
                                   (huffman ? 2 * HuffmanTable::kSymbols : 0) +
                                   std::uint64_t{len1} + len2 + Bitstream::kCrcBytes;
    if (declared > bytes.size()) {
      if (huffman) {
        walk.bytes(HuffmanTable::kSymbols, "LS1 Huffman table");
        walk.bytes(HuffmanTable::kSymbols, "LS2 Huffman table");
      }
      walk.bytes(len1, "LS1 payload");
      walk.bytes(len2, "LS2 payload");
      walk.u32("stream CRC");
    }
  }
  ByteReader tail(bytes.subspan(bytes.size() - Bitstream::kCrcBytes));
  if (crc32(bytes.first(bytes.size() - Bitstream::kCrcBytes)) != tail.u32("stream CRC")) {
    throw Error(Errc::kChecksum, "stream CRC mismatch");
  }

  s.flags = r.u8("stream flags");
  if (s.flags & ~kKnownFlags) throw Error(Errc::kFormat, "stream flags contain unknown bits");
  s.width = r.u16("stream width");
  s.height = r.u16("stream height");
  s.channels = r.u8("stream channels");
  if (s.width != kImageSize || s.height != kImageSize || s.channels != kImageChannels) {
    throw Error(Errc::kFormat, "stream geometry " + std::to_string(s.width) + "x" +
                                   std::to_string(s.height) + "x" +
                                   std::to_string(s.channels) + " is not supported");
  }
  s.model_crc = r.u32("stream model CRC");
  for (QuantSpec& q : s.quant) {
    q.min = r.f32("quantizer parameters");
    q.scale = r.f32("quantizer parameters");
    q.validate();
  }
  std::array<std::uint32_t, 2> lengths{};
  for (auto& len : lengths) len = r.u32("payload lengths");
  if (!s.huffman()) {
    for (auto len : lengths) {
      if (len != kLatentValues) {
        throw Error(Errc::kFormat, "raw latent payload declares " + std::to_string(len) +
                                       " bytes, expected " + std::to_string(kLatentValues));
      }
    }
  }
  const std::uint64_t declared = Bitstream::kFixedHeaderBytes +
                                 (s.huffman() ? 2 * HuffmanTable::kSymbols : 0) +
                                 std::uint64_t{lengths[0]} + lengths[1] + Bitstream::kCrcBytes;
  if (declared > bytes.size()) {
    throw Error(Errc::kTruncated, "stream is " + std::to_string(bytes.size()) +
                                      " bytes but its header declares " +
                                      std::to_string(declared));
  }
  if (declared < bytes.size()) {
    throw Error(Errc::kFormat, "stream has " + std::to_string(bytes.size() - declared) +
                                   " bytes beyond its declared payloads");
  }
  if (s.huffman()) {
    std::array<HuffmanTable, 2> tables;
    for (auto& t : tables) t = HuffmanTable::from_lengths(r.bytes(HuffmanTable::kSymbols, "Huffman table"));
    s.tables = tables;
  }
  for (int i = 0; i < 2; ++i) {
    auto p = r.bytes(lengths[i], i == 0 ? "LS1 payload" : "LS2 payload");
    s.payload[i].assign(p.begin(), p.end());
  }
  return s;
}

StreamStats stream_stats(const Bitstream& s) {
  StreamStats st;
  st.total_bytes = serialized_size(s);
  st.payload_bytes = s.payload[0].size() + s.payload[1].size();
  const double pixels = static_cast<double>(s.width) * s.height;
  const double source_bits = pixels * s.channels * 8.0;
  const double total_bits = static_cast<double>(st.total_bytes) * 8.0;
  st.bpp = total_bits / pixels;
  st.compression_ratio = source_bits / total_bits;
  st.payload_ratio = st.payload_bytes ? source_bits / (st.payload_bytes * 8.0) : 0.0;
  return st;
}

}  // namespace rdae
