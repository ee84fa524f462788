#include "rdae/evaluation.hpp"

#include <chrono>

#include "rdae/codec.hpp"
#include "rdae/quantizer.hpp"

namespace rdae {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Header bytes of a single-latent stream: the two-latent fixed header less
// one QuantSpec (8 bytes) and one payload length (4 bytes), plus the CRC.
constexpr std::size_t kSingleLatentOverhead = Bitstream::kFixedHeaderBytes - 12 + Bitstream::kCrcBytes;

void accumulate(MetricReport& sum, const MetricReport& r) {
  sum.psnr_db += r.psnr_db;
  sum.ssim += r.ssim;
  sum.ms_ssim += r.ms_ssim;
  sum.c_ssim += r.c_ssim;
  sum.luminance += r.luminance;
  sum.contrast += r.contrast;
  sum.structure += r.structure;
  sum.color += r.color;
}

void divide(MetricReport& r, double n) {
  r.psnr_db /= n;
  r.ssim /= n;
  r.ms_ssim /= n;
  r.c_ssim /= n;
  r.luminance /= n;
  r.contrast /= n;
  r.structure /= n;
  r.color /= n;
}

}  // namespace

Tensor reconstruct(const DualModel& model, const Tensor& image, ReconstructionMode mode,
                   bool entropy_coding) {
  if (mode == ReconstructionMode::kM1Only) {
    const QuantizedTensor q = quantize(encode(m1_input(image, model), model.m1_encoder));
    return decode(dequantize_latent(q.symbols, q.spec), model.m1_decoder);
  }
  const Codec codec(model);
  return codec.decompress(codec.compress(image, {entropy_coding, mode}));
}

EvaluationResult evaluate(const DualModel& model, std::span<const Tensor> images,
                          std::span<const std::string> names, const EvaluationOptions& options) {
  if (images.empty()) throw Error(Errc::kEmpty, "evaluation needs at least one image");
  if (!names.empty() && names.size() != images.size()) {
    throw Error(Errc::kInvalidArg, "evaluation names and images differ in count");
  }
  EvaluationResult result;
  result.mode = options.mode;
  result.entropy_coding = options.entropy_coding;
  const Codec codec(model);
  const double source_bits = static_cast<double>(kImageValues) * 8.0;
  const double pixels = static_cast<double>(kImageSize * kImageSize);

  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor& image = images[i];
    require_same_shape(image.shape(), image_shape(), "evaluation image");
    ImageEvaluation ev;
    ev.name = names.empty() ? "image_" + std::to_string(i) : names[i];
    Tensor out;
    if (options.mode == ReconstructionMode::kM1Only) {
      auto t0 = Clock::now();
      const QuantizedTensor q = quantize(encode(m1_input(image, model), model.m1_encoder));
      ev.encode_ms = ms_since(t0);
      t0 = Clock::now();
      out = decode(dequantize_latent(q.symbols, q.spec), model.m1_decoder);
      ev.decode_ms = ms_since(t0);
      ev.stream_bytes = q.symbols.size() + kSingleLatentOverhead;
    } else {
      auto t0 = Clock::now();
      const std::vector<std::uint8_t> bytes =
          serialize(codec.compress(image, {options.entropy_coding, options.mode}));
      ev.encode_ms = ms_since(t0);
      t0 = Clock::now();
      out = codec.decompress(parse_bitstream(bytes));
      ev.decode_ms = ms_since(t0);
      ev.stream_bytes = bytes.size();
    }
    ev.metrics = assess(image, out, options.ssim, options.cssim);
    accumulate(result.mean, ev.metrics);
    result.mean_encode_ms += ev.encode_ms;
    result.mean_decode_ms += ev.decode_ms;
    const double bits = static_cast<double>(ev.stream_bytes) * 8.0;
    result.mean_bpp += bits / pixels;
    result.mean_ratio += source_bits / bits;
    result.images.push_back(std::move(ev));
  }
  const double n = static_cast<double>(images.size());
  divide(result.mean, n);
  result.mean_encode_ms /= n;
  result.mean_decode_ms /= n;
  result.mean_bpp /= n;
  result.mean_ratio /= n;
  return result;
}

}  // namespace rdae
