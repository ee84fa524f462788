#pragma once

#include <string>

#include "rdae/evaluation.hpp"

namespace rdae {

// Published operating points printed next to measured values. They come from
// a much larger training run and are context, not targets.
struct PublishedFigures {
  double m1_psnr_db = 29.33;
  double m1_cssim = 0.9693;
  double m1_ms_ssim = 0.9634;
  double fused_psnr_db = 35.91;
  double fused_cssim = 0.9878;
  double fused_ms_ssim = 0.9704;
  double bpp = 1.40;
  double m1_encode_ms = 5.0;
  double m1_decode_ms = 5.0;
  double fused_encode_ms = 6.67;
  double fused_decode_ms = 10.0;
};

// Tab-separated table: header, one row per image, then a "mean" row. Columns
// start with PSNR, C-SSIM, MS-SSIM, then SSIM, the component means and
// timings.
std::string format_tsv(const EvaluationResult& result);

// Same fields as the TSV plus the summary block, as pretty-printed JSON.
std::string format_json(const EvaluationResult& result);

// Human-readable summary lines comparing the measured means with the
// published figures for the matching mode.
std::string format_summary(const EvaluationResult& result,
                           const PublishedFigures& published = {});

}  // namespace rdae
