#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdae/metrics.hpp"
#include "rdae/model.hpp"

namespace rdae {

struct EvaluationOptions {
  ReconstructionMode mode = ReconstructionMode::kFused;
  bool entropy_coding = false;
  SsimConfig ssim;
  CssimConfig cssim;
};

struct ImageEvaluation {
  std::string name;
  MetricReport metrics;
  double encode_ms = 0;
  double decode_ms = 0;
  std::size_t stream_bytes = 0;
};

struct EvaluationResult {
  ReconstructionMode mode = ReconstructionMode::kFused;
  bool entropy_coding = false;
  std::vector<ImageEvaluation> images;
  MetricReport mean;
  double mean_encode_ms = 0;
  double mean_decode_ms = 0;
  double mean_bpp = 0;
  double mean_ratio = 0;
};

// Reconstructions go through 8-bit latent quantization in every mode: fused
// and additive through the full codec (so bpp and ratio are measured on real
// streams), m1_only through LS1 alone with its 4096 payload bytes and the
// same header overhead as a two-latent stream minus the second latent's
// quantizer and length fields.
// Throws Errc::kEmpty for an empty image set and Errc::kInvalidArg when
// `names` is nonempty with a different length.
EvaluationResult evaluate(const DualModel& model, std::span<const Tensor> images,
                          std::span<const std::string> names,
                          const EvaluationOptions& options = {});

// Reconstruction for one image in the given mode, without timing.
Tensor reconstruct(const DualModel& model, const Tensor& image, ReconstructionMode mode,
                   bool entropy_coding = false);

}  // namespace rdae
