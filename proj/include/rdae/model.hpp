#pragma once

#include <cstdint>
#include <optional>

#include "rdae/adam.hpp"
#include "rdae/layers.hpp"
#include "rdae/tensor.hpp"
#include "rdae/whitening.hpp"

namespace rdae {

inline constexpr std::size_t kImageSize = 128;
inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kLatentSize = 16;
inline constexpr std::size_t kLatentChannels = 16;
inline constexpr std::size_t kLatentValues = kLatentSize * kLatentSize * kLatentChannels;
inline constexpr std::size_t kImageValues = kImageSize * kImageSize * kImageChannels;

inline const Shape& image_shape() {
  static const Shape s{kImageSize, kImageSize, kImageChannels};
  return s;
}
inline const Shape& latent_shape() {
  static const Shape s{kLatentSize, kLatentSize, kLatentChannels};
  return s;
}

// 16x16x16 bottleneck tensor produced by an encoder.
class Latent {
 public:
  Latent() : values_(latent_shape()) {}
  explicit Latent(Tensor values) : values_(std::move(values)) {
    require_same_shape(values_.shape(), latent_shape(), "latent");
  }

  const Tensor& tensor() const noexcept { return values_; }
  Tensor& tensor() noexcept { return values_; }

  friend bool operator==(const Latent&, const Latent&) = default;

 private:
  Tensor values_;
};

struct ConvLayer {
  Param<float> kernels;  // (3, 3, C_in, C_out)
  Param<float> bias;     // (C_out)

  template <typename F>
  void for_each_param(F&& f) {
    f(kernels);
    f(bias);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    f(kernels);
    f(bias);
  }
};

struct DenseLayer {
  Param<float> weights;  // (C_in, C_out)
  Param<float> bias;     // (C_out)

  template <typename F>
  void for_each_param(F&& f) {
    f(weights);
    f(bias);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    f(weights);
    f(bias);
  }
};

// conv3x3(64)+relu, pool, conv3x3(32)+relu, pool, conv3x3(32)+relu, pool,
// dense(16)+relu. Convolutions are stride 1 with same padding; the three
// pools do all of the 128 -> 16 downsampling.
struct EncoderParams {
  ConvLayer conv1;
  ConvLayer conv2;
  ConvLayer conv3;
  DenseLayer dense;

  template <typename F>
  void for_each_param(F&& f) {
    conv1.for_each_param(f);
    conv2.for_each_param(f);
    conv3.for_each_param(f);
    dense.for_each_param(f);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    conv1.for_each_param(f);
    conv2.for_each_param(f);
    conv3.for_each_param(f);
    dense.for_each_param(f);
  }
};

// dense(16)+relu, conv3x3(32)+relu, up, conv3x3(32)+relu, up,
// conv3x3(64)+relu, up, conv3x3(3)+sigmoid.
struct DecoderParams {
  DenseLayer dense;
  ConvLayer conv1;
  ConvLayer conv2;
  ConvLayer conv3;
  ConvLayer out;

  template <typename F>
  void for_each_param(F&& f) {
    dense.for_each_param(f);
    conv1.for_each_param(f);
    conv2.for_each_param(f);
    conv3.for_each_param(f);
    out.for_each_param(f);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    dense.for_each_param(f);
    conv1.for_each_param(f);
    conv2.for_each_param(f);
    conv3.for_each_param(f);
    out.for_each_param(f);
  }
};

// conv3x3(32 -> 16)+relu over the channel concatenation [LS1, LS2].
struct FusionParams {
  ConvLayer conv;

  template <typename F>
  void for_each_param(F&& f) {
    conv.for_each_param(f);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    conv.for_each_param(f);
  }
};

enum TrainedPhase : std::uint8_t {
  kPhaseM1 = 1u << 0,
  kPhaseM2 = 1u << 1,
  kPhaseM3 = 1u << 2,
};

struct DualModel {
  static constexpr float kResidualScale = 128.0f;
  static constexpr std::uint8_t kFormatVersion = 1;

  EncoderParams m1_encoder;
  DecoderParams m1_decoder;
  EncoderParams m2_encoder;
  DecoderParams m2_decoder;
  FusionParams m3_fusion;
  DecoderParams m3_decoder;

  std::uint64_t seed = 0;
  std::uint8_t trained_phases = 0;
  // Channel whitening applied to M1's input when present.
  std::optional<WhiteningTransform> whitening;

  // He-uniform for ReLU layers, Glorot-uniform for the sigmoid outputs, zero
  // biases. Every parameter tensor draws from its own counter stream keyed by
  // (seed, tensor index).
  static DualModel initialize(std::uint64_t seed);

  template <typename F>
  void for_each_param(F&& f) {
    m1_encoder.for_each_param(f);
    m1_decoder.for_each_param(f);
    m2_encoder.for_each_param(f);
    m2_decoder.for_each_param(f);
    m3_fusion.for_each_param(f);
    m3_decoder.for_each_param(f);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    m1_encoder.for_each_param(f);
    m1_decoder.for_each_param(f);
    m2_encoder.for_each_param(f);
    m2_decoder.for_each_param(f);
    m3_fusion.for_each_param(f);
    m3_decoder.for_each_param(f);
  }

  std::size_t parameter_count() const;
};

// Which reconstruction path a decoder side uses.
enum class ReconstructionMode { kM1Only, kFused, kAdditive };

const char* mode_name(ReconstructionMode mode);
ReconstructionMode parse_mode(const std::string& name);

// Input to M1's encoder: the image itself, or its whitened version when the
// model carries a whitening transform.
Tensor m1_input(const Tensor& image, const DualModel& model);

Latent encode(const Tensor& image, const EncoderParams& encoder);
Tensor decode(const Latent& latent, const DecoderParams& decoder);

// clamp(0.5 + (original - intermediate) * 128/255, 0, 1)
Tensor residual_scaled(const Tensor& original, const Tensor& intermediate);
// Inverse of the affine part: (s - 0.5) * 255/128.
Tensor residual_unscaled(const Tensor& scaled);

Tensor fuse_and_decode(const Latent& ls1, const Latent& ls2,
                       const FusionParams& fusion, const DecoderParams& decoder);
Tensor additive_reconstruct(const Latent& ls1, const Latent& ls2,
                            const DualModel& model);

struct LatentPair {
  Latent ls1;
  Latent ls2;
};

// Full analysis path: LS1 from M1, then LS2 from M2 applied to the scaled
// residual of M1's reconstruction.
LatentPair analyze(const Tensor& image, const DualModel& model);
Tensor synthesize(const LatentPair& latents, const DualModel& model,
                  ReconstructionMode mode);

// --- training support ---------------------------------------------------

struct EncoderTrace {
  Tensor input;
  Tensor act1;
  PoolResult<float> pool1;
  Tensor act2;
  PoolResult<float> pool2;
  Tensor act3;
  PoolResult<float> pool3;
  Tensor latent;
};

struct DecoderTrace {
  Tensor latent;
  Tensor act0;
  Tensor act1;
  Tensor up1;
  Tensor act2;
  Tensor up2;
  Tensor act3;
  Tensor up3;
  Tensor output;
};

struct FusionTrace {
  Tensor joined;
  Tensor fused;
};

EncoderTrace encode_traced(const Tensor& image, const EncoderParams& encoder);
// Adds parameter gradients into the encoder's Param::grad tensors.
void encode_backward(const EncoderTrace& trace, EncoderParams& encoder,
                     const Tensor& grad_latent);

DecoderTrace decode_traced(const Tensor& latent, const DecoderParams& decoder);
// Adds parameter gradients into the decoder's Param::grad tensors and returns
// the gradient with respect to the decoder input.
Tensor decode_backward(const DecoderTrace& trace, DecoderParams& decoder,
                       const Tensor& grad_output);

FusionTrace fuse_traced(const Latent& ls1, const Latent& ls2,
                        const FusionParams& fusion);
void fuse_backward(const FusionTrace& trace, FusionParams& fusion,
                   const Tensor& grad_fused);

}  // namespace rdae
