#include "rdae/codec.hpp"

#include <sstream>

#include "rdae/model_io.hpp"

namespace rdae {

Codec::Codec(const DualModel& model) : model_(model), model_crc_(model_checksum(model)) {}

Bitstream Codec::compress(const Tensor& image, const CodecOptions& options) const {
  if (options.mode == ReconstructionMode::kM1Only) {
    throw Error(Errc::kInvalidArg, "streams decode with the fused or additive path");
  }
  const LatentPair latents = analyze(image, model_);

  Bitstream s;
  s.flags = (options.entropy_coding ? kStreamHuffman : 0) |
            (options.mode == ReconstructionMode::kAdditive ? kStreamAdditive : 0) |
            (model_.whitening ? kStreamWhitened : 0);
  s.width = static_cast<std::uint16_t>(kImageSize);
  s.height = static_cast<std::uint16_t>(kImageSize);
  s.channels = static_cast<std::uint8_t>(kImageChannels);
  s.model_crc = model_crc_;

  const Latent* planes[2] = {&latents.ls1, &latents.ls2};
  std::array<HuffmanTable, 2> tables;
  for (int i = 0; i < 2; ++i) {
    QuantizedTensor q = quantize(*planes[i]);
    s.quant[i] = q.spec;
    if (options.entropy_coding) {
      tables[i] = HuffmanTable::build(histogram(q.symbols));
      s.payload[i] = huffman_encode(q.symbols, tables[i]);
    } else {
      s.payload[i] = std::move(q.symbols);
    }
  }
  if (options.entropy_coding) s.tables = tables;
  return s;
}

LatentPair Codec::decode_latents(const Bitstream& s) const {
  if (s.model_crc != model_crc_) {
    std::ostringstream msg;
    msg << "stream was produced by model " << std::hex << s.model_crc
        << ", not by the supplied model " << model_crc_;
    throw Error(Errc::kModelMismatch, msg.str());
  }
  if (s.whitened() != model_.whitening.has_value()) {
    throw Error(Errc::kModelMismatch, "stream and model disagree on input whitening");
  }
  std::array<Latent, 2> planes;
  for (int i = 0; i < 2; ++i) {
    std::vector<std::uint8_t> symbols =
        s.huffman() ? huffman_decode(s.payload[i], (*s.tables)[i], kLatentValues) : s.payload[i];
    planes[i] = dequantize_latent(symbols, s.quant[i]);
  }
  return {std::move(planes[0]), std::move(planes[1])};
}

Tensor Codec::decompress(const Bitstream& s) const {
  const LatentPair latents = decode_latents(s);
  return synthesize(latents, model_,
                    s.additive() ? ReconstructionMode::kAdditive : ReconstructionMode::kFused);
}

}  // namespace rdae
