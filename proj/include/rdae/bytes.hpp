#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "rdae/error.hpp"

namespace rdae {

// CRC-32 (ISO-HDLC polynomial, as used by zlib and PNG).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Little-endian serializer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void text(const char* s, std::size_t n) { buf_.insert(buf_.end(), s, s + n); }

  std::size_t size() const noexcept { return buf_.size(); }
  const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> buf_;
};

// Little-endian bounds-checked reader. Running past the end throws
// Errc::kTruncated naming the section being read.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8(const char* section) { return static_cast<std::uint8_t>(get(1, section)); }
  std::uint16_t u16(const char* section) { return static_cast<std::uint16_t>(get(2, section)); }
  std::uint32_t u32(const char* section) { return static_cast<std::uint32_t>(get(4, section)); }
  std::uint64_t u64(const char* section) { return get(8, section); }
  float f32(const char* section) { return std::bit_cast<float>(u32(section)); }
  double f64(const char* section) { return std::bit_cast<double>(u64(section)); }

  std::span<const std::uint8_t> bytes(std::size_t n, const char* section) {
    need(n, section);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n, const char* section) const {
    if (data_.size() - pos_ < n) {
      throw Error(Errc::kTruncated, std::string("data ends inside ") + section + " (need " +
                                        std::to_string(n) + " bytes, " +
                                        std::to_string(data_.size() - pos_) + " left)");
    }
  }

  std::uint64_t get(int n, const char* section) {
    need(static_cast<std::size_t>(n), section);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace rdae
