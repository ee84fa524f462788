#pragma once

#include <cstdint>

#include "rdae/bitstream.hpp"
#include "rdae/model.hpp"

namespace rdae {

struct CodecOptions {
  bool entropy_coding = false;
  // Decoder path recorded in the stream: fused (M3) or additive.
  ReconstructionMode mode = ReconstructionMode::kFused;
};

// Binds a trained model to the container format. Holds a reference to the
// model, which must outlive the codec and stay unmodified.
class Codec {
 public:
  explicit Codec(const DualModel& model);

  std::uint32_t model_crc() const noexcept { return model_crc_; }

  // M1 -> LS1, intermediate decode, scaled residual, M2 -> LS2, 8-bit
  // quantization of both latents, optional Huffman coding.
  Bitstream compress(const Tensor& image, const CodecOptions& options = {}) const;

  // Verifies the model binding, dequantizes and decodes along the path named
  // by the stream flags.
  Tensor decompress(const Bitstream& stream) const;

  // Decoded latents without running a decoder.
  LatentPair decode_latents(const Bitstream& stream) const;

 private:
  const DualModel& model_;
  std::uint32_t model_crc_;
};

}  // namespace rdae
