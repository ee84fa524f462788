#include "rdae/model.hpp"

#include <algorithm>
#include <cmath>

#include "rdae/rng.hpp"

namespace rdae {
namespace {

enum class Init { kHeUniform, kGlorotUniform };

// Parameter tensors are numbered in for_each_param order; each number keys
// an independent random stream.
class ParamFactory {
 public:
  explicit ParamFactory(std::uint64_t seed) : seed_(seed) {}

  ConvLayer conv(std::size_t c_in, std::size_t c_out, Init init) {
    ConvLayer layer;
    const double fan_in = 9.0 * static_cast<double>(c_in);
    const double fan_out = 9.0 * static_cast<double>(c_out);
    layer.kernels = Param<float>(uniform(Shape{3, 3, c_in, c_out}, limit(init, fan_in, fan_out)));
    layer.bias = Param<float>(zeros(Shape{c_out}));
    return layer;
  }

  DenseLayer dense(std::size_t c_in, std::size_t c_out) {
    DenseLayer layer;
    const double fan_in = static_cast<double>(c_in);
    layer.weights = Param<float>(
        uniform(Shape{c_in, c_out}, limit(Init::kHeUniform, fan_in, static_cast<double>(c_out))));
    layer.bias = Param<float>(zeros(Shape{c_out}));
    return layer;
  }

 private:
  static double limit(Init init, double fan_in, double fan_out) {
    return init == Init::kHeUniform ? std::sqrt(6.0 / fan_in)
                                    : std::sqrt(6.0 / (fan_in + fan_out));
  }

  Tensor uniform(Shape shape, double bound) {
    CounterRng rng(CounterRng::derive(seed_, 0x1217, index_++));
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-bound, bound));
    return t;
  }

  Tensor zeros(Shape shape) {
    ++index_;
    return Tensor(std::move(shape));
  }

  std::uint64_t seed_;
  std::uint64_t index_ = 0;
};

EncoderParams make_encoder(ParamFactory& pf) {
  EncoderParams e;
  e.conv1 = pf.conv(kImageChannels, 64, Init::kHeUniform);
  e.conv2 = pf.conv(64, 32, Init::kHeUniform);
  e.conv3 = pf.conv(32, 32, Init::kHeUniform);
  e.dense = pf.dense(32, kLatentChannels);
  return e;
}

DecoderParams make_decoder(ParamFactory& pf) {
  DecoderParams d;
  d.dense = pf.dense(kLatentChannels, 16);
  d.conv1 = pf.conv(16, 32, Init::kHeUniform);
  d.conv2 = pf.conv(32, 32, Init::kHeUniform);
  d.conv3 = pf.conv(32, 64, Init::kHeUniform);
  d.out = pf.conv(64, kImageChannels, Init::kGlorotUniform);
  return d;
}

Tensor conv_same(const Tensor& x, const ConvLayer& layer) {
  return conv2d_forward(x, layer.kernels.value, layer.bias.value, 1, Padding::kSame);
}

Tensor dense(const Tensor& x, const DenseLayer& layer) {
  return dense_channels_forward(x, layer.weights.value, layer.bias.value);
}

void add_into(Tensor& acc, const Tensor& g) {
  float* a = acc.raw();
  const float* b = g.raw();
  for (std::size_t i = 0; i < acc.size(); ++i) a[i] += b[i];
}

// Backprop through a same-padded stride-1 conv layer; accumulates parameter
// gradients and returns the input gradient when requested.
Tensor conv_backward(const Tensor& input, ConvLayer& layer, const Tensor& grad_out,
                     bool want_input_grad) {
  ConvGrads<float> g = conv2d_backward(input, layer.kernels.value, 1, Padding::kSame,
                                       grad_out, want_input_grad);
  add_into(layer.kernels.grad, g.kernels);
  add_into(layer.bias.grad, g.bias);
  return std::move(g.input);
}

Tensor dense_backward(const Tensor& input, DenseLayer& layer, const Tensor& grad_out) {
  DenseGrads<float> g = dense_channels_backward(input, layer.weights.value, grad_out);
  add_into(layer.weights.grad, g.weights);
  add_into(layer.bias.grad, g.bias);
  return std::move(g.input);
}

void require_image(const Tensor& image, const char* what) {
  if (image.shape() != image_shape()) {
    throw Error(Errc::kShape, std::string(what) + ": expected a " + image_shape().str() +
                                  " image, got " + image.shape().str());
  }
}

constexpr float kResidualSlope = DualModel::kResidualScale / 255.0f;

}  // namespace

DualModel DualModel::initialize(std::uint64_t seed) {
  ParamFactory pf(seed);
  DualModel m;
  m.seed = seed;
  m.m1_encoder = make_encoder(pf);
  m.m1_decoder = make_decoder(pf);
  m.m2_encoder = make_encoder(pf);
  m.m2_decoder = make_decoder(pf);
  m.m3_fusion.conv = pf.conv(2 * kLatentChannels, kLatentChannels, Init::kHeUniform);
  m.m3_decoder = make_decoder(pf);
  return m;
}

std::size_t DualModel::parameter_count() const {
  std::size_t n = 0;
  for_each_param([&](const Param<float>& p) { n += p.value.size(); });
  return n;
}

const char* mode_name(ReconstructionMode mode) {
  switch (mode) {
    case ReconstructionMode::kM1Only: return "m1_only";
    case ReconstructionMode::kFused: return "fused";
    case ReconstructionMode::kAdditive: return "additive";
  }
  return "unknown";
}

ReconstructionMode parse_mode(const std::string& name) {
  if (name == "m1_only") return ReconstructionMode::kM1Only;
  if (name == "fused") return ReconstructionMode::kFused;
  if (name == "additive") return ReconstructionMode::kAdditive;
  throw Error(Errc::kInvalidArg,
              "unknown reconstruction mode '" + name + "' (expected m1_only, fused or additive)");
}

Tensor m1_input(const Tensor& image, const DualModel& model) {
  return model.whitening ? model.whitening->apply(image) : image;
}

EncoderTrace encode_traced(const Tensor& image, const EncoderParams& encoder) {
  require_image(image, "encode");
  EncoderTrace t;
  t.input = image;
  t.act1 = relu_forward(conv_same(image, encoder.conv1));
  t.pool1 = maxpool2x2_forward(t.act1);
  t.act2 = relu_forward(conv_same(t.pool1.output, encoder.conv2));
  t.pool2 = maxpool2x2_forward(t.act2);
  t.act3 = relu_forward(conv_same(t.pool2.output, encoder.conv3));
  t.pool3 = maxpool2x2_forward(t.act3);
  t.latent = relu_forward(dense(t.pool3.output, encoder.dense));
  return t;
}

void encode_backward(const EncoderTrace& t, EncoderParams& encoder,
                     const Tensor& grad_latent) {
  require_same_shape(grad_latent.shape(), latent_shape(), "encode backward");
  Tensor g = relu_backward(t.latent, grad_latent);
  g = dense_backward(t.pool3.output, encoder.dense, g);
  g = relu_backward(t.act3, maxpool2x2_backward(t.pool3, g));
  g = conv_backward(t.pool2.output, encoder.conv3, g, true);
  g = relu_backward(t.act2, maxpool2x2_backward(t.pool2, g));
  g = conv_backward(t.pool1.output, encoder.conv2, g, true);
  g = relu_backward(t.act1, maxpool2x2_backward(t.pool1, g));
  conv_backward(t.input, encoder.conv1, g, false);
}

DecoderTrace decode_traced(const Tensor& latent, const DecoderParams& decoder) {
  require_same_shape(latent.shape(), latent_shape(), "decode");
  DecoderTrace t;
  t.latent = latent;
  t.act0 = relu_forward(dense(latent, decoder.dense));
  t.act1 = relu_forward(conv_same(t.act0, decoder.conv1));
  t.up1 = upsample2x2_forward(t.act1);
  t.act2 = relu_forward(conv_same(t.up1, decoder.conv2));
  t.up2 = upsample2x2_forward(t.act2);
  t.act3 = relu_forward(conv_same(t.up2, decoder.conv3));
  t.up3 = upsample2x2_forward(t.act3);
  t.output = sigmoid_forward(conv_same(t.up3, decoder.out));
  return t;
}

Tensor decode_backward(const DecoderTrace& t, DecoderParams& decoder,
                       const Tensor& grad_output) {
  require_same_shape(grad_output.shape(), image_shape(), "decode backward");
  Tensor g = sigmoid_backward(t.output, grad_output);
  g = conv_backward(t.up3, decoder.out, g, true);
  g = relu_backward(t.act3, upsample2x2_backward(g));
  g = conv_backward(t.up2, decoder.conv3, g, true);
  g = relu_backward(t.act2, upsample2x2_backward(g));
  g = conv_backward(t.up1, decoder.conv2, g, true);
  g = relu_backward(t.act1, upsample2x2_backward(g));
  g = conv_backward(t.act0, decoder.conv1, g, true);
  g = relu_backward(t.act0, g);
  return dense_backward(t.latent, decoder.dense, g);
}

FusionTrace fuse_traced(const Latent& ls1, const Latent& ls2, const FusionParams& fusion) {
  FusionTrace t;
  t.joined = concat_channels(ls1.tensor(), ls2.tensor());
  t.fused = relu_forward(conv_same(t.joined, fusion.conv));
  return t;
}

void fuse_backward(const FusionTrace& t, FusionParams& fusion, const Tensor& grad_fused) {
  conv_backward(t.joined, fusion.conv, relu_backward(t.fused, grad_fused), false);
}

Latent encode(const Tensor& image, const EncoderParams& encoder) {
  return Latent(std::move(encode_traced(image, encoder).latent));
}

Tensor decode(const Latent& latent, const DecoderParams& decoder) {
  const Tensor& z = latent.tensor();
  Tensor h = relu_forward(dense(z, decoder.dense));
  h = upsample2x2_forward(relu_forward(conv_same(h, decoder.conv1)));
  h = upsample2x2_forward(relu_forward(conv_same(h, decoder.conv2)));
  h = upsample2x2_forward(relu_forward(conv_same(h, decoder.conv3)));
  return sigmoid_forward(conv_same(h, decoder.out));
}

Tensor residual_scaled(const Tensor& original, const Tensor& intermediate) {
  require_same_shape(original.shape(), intermediate.shape(), "residual_scaled");
  Tensor out(original.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float r = original[i] - intermediate[i];
    out[i] = std::clamp(0.5f + r * kResidualSlope, 0.0f, 1.0f);
  }
  return out;
}

Tensor residual_unscaled(const Tensor& scaled) {
  Tensor out(scaled.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (scaled[i] - 0.5f) / kResidualSlope;
  return out;
}

Tensor fuse_and_decode(const Latent& ls1, const Latent& ls2, const FusionParams& fusion,
                       const DecoderParams& decoder) {
  FusionTrace t = fuse_traced(ls1, ls2, fusion);
  return decode(Latent(std::move(t.fused)), decoder);
}

Tensor additive_reconstruct(const Latent& ls1, const Latent& ls2, const DualModel& model) {
  const Tensor intermediate = decode(ls1, model.m1_decoder);
  const Tensor residual = residual_unscaled(decode(ls2, model.m2_decoder));
  Tensor out(intermediate.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(intermediate[i] + residual[i], 0.0f, 1.0f);
  }
  return out;
}

LatentPair analyze(const Tensor& image, const DualModel& model) {
  require_image(image, "analyze");
  Latent ls1 = encode(m1_input(image, model), model.m1_encoder);
  const Tensor intermediate = decode(ls1, model.m1_decoder);
  Latent ls2 = encode(residual_scaled(image, intermediate), model.m2_encoder);
  return {std::move(ls1), std::move(ls2)};
}

Tensor synthesize(const LatentPair& latents, const DualModel& model, ReconstructionMode mode) {
  switch (mode) {
    case ReconstructionMode::kM1Only:
      return decode(latents.ls1, model.m1_decoder);
    case ReconstructionMode::kFused:
      return fuse_and_decode(latents.ls1, latents.ls2, model.m3_fusion, model.m3_decoder);
    case ReconstructionMode::kAdditive:
      return additive_reconstruct(latents.ls1, latents.ls2, model);
  }
  throw Error(Errc::kInvalidArg, "unknown reconstruction mode");
}

}  // namespace rdae
