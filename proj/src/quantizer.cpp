#include "rdae/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rdae {

void QuantSpec::validate() const {
  if (!std::isfinite(min) || !std::isfinite(scale) || !(scale > 0.0f)) {
    throw Error(Errc::kFormat, "invalid quantizer parameters (min " + std::to_string(min) +
                                   ", scale " + std::to_string(scale) + ")");
  }
}

QuantizedTensor quantize(std::span<const float> values) {
  if (values.empty()) throw Error(Errc::kInvalidArg, "quantize: empty tensor");
  float lo = values[0];
  float hi = values[0];
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(Errc::kInvalidArg, "quantize: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  QuantizedTensor q;
  q.spec.min = lo;
  q.spec.scale = std::max(static_cast<float>((static_cast<double>(hi) - lo) /
                                             (QuantSpec::kLevels - 1)),
                          QuantSpec::kMinScale);
  q.symbols.resize(values.size());
  const double min = q.spec.min;
  const double scale = q.spec.scale;
  for (std::size_t i = 0; i < values.size(); ++i) {
    // std::round rounds halves away from zero.
    const double level = std::round((values[i] - min) / scale);
    q.symbols[i] = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
  }
  return q;
}

std::vector<float> dequantize(std::span<const std::uint8_t> symbols, const QuantSpec& spec) {
  spec.validate();
  std::vector<float> out(symbols.size());
  const double min = spec.min;
  const double scale = spec.scale;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    out[i] = static_cast<float>(min + symbols[i] * scale);
  }
  return out;
}

QuantizedTensor quantize(const Latent& latent) { return quantize(latent.tensor().data()); }

Latent dequantize_latent(std::span<const std::uint8_t> symbols, const QuantSpec& spec) {
  if (symbols.size() != kLatentValues) {
    throw Error(Errc::kFormat, "latent plane holds " + std::to_string(symbols.size()) +
                                   " symbols, expected " + std::to_string(kLatentValues));
  }
  return Latent(Tensor(latent_shape(), dequantize(symbols, spec)));
}

}  // namespace rdae
