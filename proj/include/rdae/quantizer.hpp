#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rdae/model.hpp"

namespace rdae {

// Per-tensor uniform 8-bit quantizer: symbol = round((x - min) / scale),
// value = min + symbol * scale, with scale = (max - min) / 255.
struct QuantSpec {
  static constexpr int kLevels = 256;
  // A constant tensor has no range; its scale is floored to this value.
  static constexpr float kMinScale = 1e-8f;

  float min = 0.0f;
  float scale = 1.0f;

  // Throws Errc::kFormat if min/scale are not finite or scale <= 0.
  void validate() const;

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

struct QuantizedTensor {
  std::vector<std::uint8_t> symbols;
  QuantSpec spec;
};

QuantizedTensor quantize(std::span<const float> values);
std::vector<float> dequantize(std::span<const std::uint8_t> symbols, const QuantSpec& spec);

QuantizedTensor quantize(const Latent& latent);
Latent dequantize_latent(std::span<const std::uint8_t> symbols, const QuantSpec& spec);

}  // namespace rdae
