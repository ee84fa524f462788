#include "rdae/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "rdae/rng.hpp"

namespace rdae {
namespace {

constexpr std::uint64_t kShuffleTag = 0x5fu;

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, Phase phase,
                                     std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(CounterRng::derive(seed, kShuffleTag + static_cast<std::uint64_t>(phase),
                                    epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

template <typename Params>
void zero_grads(Params& p) {
  p.for_each_param([](Param<float>& q) { q.zero_grad(); });
}

template <typename Params>
void step(Params& p, float grad_scale, const AdamConfig& adam) {
  p.for_each_param([&](Param<float>& q) {
    q.scale_grad(grad_scale);
    adam_step(q, adam);
  });
}

template <typename Params>
void reset_optimizer(Params& p) {
  p.for_each_param([](Param<float>& q) { q.reset_optimizer(); });
}

// Drives one phase: `per_image(i)` accumulates gradients for sample i and
// returns its loss; `apply(scale)` performs the optimizer step.
template <typename PerImage, typename ZeroGrad, typename Apply>
std::vector<EpochReport> run_phase(Phase phase, std::size_t n, const PhaseSettings& s,
                                   PerImage&& per_image, ZeroGrad&& zero, Apply&& apply,
                                   const EpochCallback& on_epoch) {
  if (n == 0) throw Error(Errc::kEmpty, std::string("no training images for ") + phase_name(phase));
  if (s.batch_size < 1 || s.epochs < 1) {
    throw Error(Errc::kConfig, "batch_size and epochs must be at least 1");
  }
  s.adam.validate();
  std::vector<EpochReport> reports;
  for (std::size_t epoch = 1; epoch <= s.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = epoch_order(n, s.seed, phase, epoch);
    double loss_sum = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += s.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + s.batch_size);
      zero();
      double batch_loss = 0;
      for (std::size_t i = start; i < end; ++i) batch_loss += per_image(order[i]);
      if (!std::isfinite(batch_loss)) {
        throw Error(Errc::kNumeric, std::string("non-finite loss in phase ") + phase_name(phase) +
                                        ", epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_index + 1));
      }
      apply(1.0f / static_cast<float>(end - start));
      loss_sum += batch_loss;
    }
    EpochReport r;
    r.phase = phase;
    r.epoch = epoch;
    r.mean_loss = loss_sum / static_cast<double>(n);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    reports.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  return reports;
}

// Autoencoder phase shared by M1 and M2: inputs[i] -> targets[i].
std::vector<EpochReport> train_autoencoder(Phase phase, EncoderParams& enc, DecoderParams& dec,
                                           const std::vector<Tensor>& inputs,
                                           std::span<const Tensor> targets,
                                           const PhaseSettings& s, const EpochCallback& cb) {
  reset_optimizer(enc);
  reset_optimizer(dec);
  auto per_image = [&](std::size_t i) {
    const EncoderTrace et = encode_traced(inputs[i], enc);
    const DecoderTrace dt = decode_traced(et.latent, dec);
    const LossResult<float> loss = mse_loss(dt.output, targets[i]);
    const Tensor grad_latent = decode_backward(dt, dec, loss.grad);
    encode_backward(et, enc, grad_latent);
    return static_cast<double>(loss.loss);
  };
  auto zero = [&] {
    zero_grads(enc);
    zero_grads(dec);
  };
  auto apply = [&](float scale) {
    step(enc, scale, s.adam);
    step(dec, scale, s.adam);
  };
  return run_phase(phase, inputs.size(), s, per_image, zero, apply, cb);
}

}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kM1: return "M1";
    case Phase::kM2: return "M2";
    case Phase::kM3: return "M3";
  }
  return "?";
}

std::string format_epoch_report(const EpochReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s\t%zu\t%.8g\t%.3f", phase_name(r.phase), r.epoch,
                r.mean_loss, r.seconds);
  return buf;
}

PhaseSettings phase_settings(const TrainConfig& cfg, Phase phase) {
  PhaseSettings s;
  s.epochs = phase == Phase::kM1 ? cfg.epochs_m1 : phase == Phase::kM2 ? cfg.epochs_m2 : cfg.epochs_m3;
  s.batch_size = cfg.batch_size;
  s.adam = cfg.adam;
  s.seed = cfg.seed;
  return s;
}

std::vector<EpochReport> train_m1(DualModel& model, std::span<const Tensor> images,
                                  const PhaseSettings& settings, const EpochCallback& on_epoch) {
  std::vector<Tensor> inputs;
  inputs.reserve(images.size());
  for (const Tensor& img : images) {
    require_same_shape(img.shape(), image_shape(), "M1 training image");
    inputs.push_back(m1_input(img, model));
  }
  auto reports = train_autoencoder(Phase::kM1, model.m1_encoder, model.m1_decoder, inputs,
                                   images, settings, on_epoch);
  model.trained_phases |= kPhaseM1;
  return reports;
}

std::vector<EpochReport> train_m2(DualModel& model, std::span<const Tensor> images,
                                  const PhaseSettings& settings, const EpochCallback& on_epoch) {
  std::vector<Tensor> residuals;
  residuals.reserve(images.size());
  for (const Tensor& img : images) {
    require_same_shape(img.shape(), image_shape(), "M2 training image");
    const Tensor intermediate = decode(encode(m1_input(img, model), model.m1_encoder),
                                       model.m1_decoder);
    residuals.push_back(residual_scaled(img, intermediate));
  }
  auto reports = train_autoencoder(Phase::kM2, model.m2_encoder, model.m2_decoder, residuals,
                                   residuals, settings, on_epoch);
  model.trained_phases |= kPhaseM2;
  return reports;
}

std::vector<EpochReport> train_m3(DualModel& model, std::span<const Tensor> images,
                                  const PhaseSettings& settings, const EpochCallback& on_epoch) {
  std::vector<LatentPair> latents;
  latents.reserve(images.size());
  for (const Tensor& img : images) {
    require_same_shape(img.shape(), image_shape(), "M3 training image");
    latents.push_back(analyze(img, model));
  }
  FusionParams& fusion = model.m3_fusion;
  DecoderParams& dec = model.m3_decoder;
  reset_optimizer(fusion);
  reset_optimizer(dec);
  auto per_image = [&](std::size_t i) {
    const FusionTrace ft = fuse_traced(latents[i].ls1, latents[i].ls2, fusion);
    const DecoderTrace dt = decode_traced(ft.fused, dec);
    const LossResult<float> loss = mse_loss(dt.output, images[i]);
    const Tensor grad_fused = decode_backward(dt, dec, loss.grad);
    fuse_backward(ft, fusion, grad_fused);
    return static_cast<double>(loss.loss);
  };
  auto zero = [&] {
    zero_grads(fusion);
    zero_grads(dec);
  };
  auto apply = [&](float scale) {
    step(fusion, scale, settings.adam);
    step(dec, scale, settings.adam);
  };
  auto reports = run_phase(Phase::kM3, images.size(), settings, per_image, zero, apply, on_epoch);
  model.trained_phases |= kPhaseM3;
  return reports;
}

void warm_start_m3(DualModel& model) {
  DecoderParams& dst = model.m3_decoder;
  const DecoderParams& src = model.m1_decoder;
  dst = src;
  reset_optimizer(dst);
  Tensor& k = model.m3_fusion.conv.kernels.value;
  k.fill(0.0f);
  const std::size_t c_in = k.shape()[2];
  const std::size_t c_out = k.shape()[3];
  // Centre tap of a 3x3 kernel: LS1 channel c -> output channel c.
  for (std::size_t c = 0; c < c_out; ++c) k[((1 * 3 + 1) * c_in + c) * c_out + c] = 1.0f;
  model.m3_fusion.conv.bias.value.fill(0.0f);
  reset_optimizer(model.m3_fusion);
}

DualModel train_dual(const TrainConfig& cfg, std::span<const Tensor> images,
                     const EpochCallback& on_epoch) {
  cfg.validate();
  DualModel model = DualModel::initialize(cfg.seed);
  if (cfg.whitening) model.whitening = whitening_fit(images).transform;
  train_m1(model, images, phase_settings(cfg, Phase::kM1), on_epoch);
  train_m2(model, images, phase_settings(cfg, Phase::kM2), on_epoch);
  if (cfg.m3_warm_start) warm_start_m3(model);
  train_m3(model, images, phase_settings(cfg, Phase::kM3), on_epoch);
  return model;
}

}  // namespace rdae
