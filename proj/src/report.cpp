#include "rdae/report.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

namespace rdae {
namespace {

std::string num(double v, int precision) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string row(const std::string& name, const MetricReport& m, double enc, double dec,
                const std::string& bytes) {
  return name + '\t' + num(m.psnr_db, 4) + '\t' + num(m.c_ssim, 6) + '\t' + num(m.ms_ssim, 6) +
         '\t' + num(m.ssim, 6) + '\t' + num(m.luminance, 6) + '\t' + num(m.contrast, 6) + '\t' +
         num(m.structure, 6) + '\t' + num(m.color, 6) + '\t' + num(enc, 3) + '\t' +
         num(dec, 3) + '\t' + bytes + '\n';
}

nlohmann::json metrics_json(const MetricReport& m) {
  auto finite_or_null = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {{"psnr_db", finite_or_null(m.psnr_db)},
          {"c_ssim", m.c_ssim},
          {"ms_ssim", m.ms_ssim},
          {"ssim", m.ssim},
          {"luminance", m.luminance},
          {"contrast", m.contrast},
          {"structure", m.structure},
          {"color", m.color}};
}

}  // namespace

std::string format_tsv(const EvaluationResult& result) {
  std::string out =
      "image\tpsnr_db\tc_ssim\tms_ssim\tssim\tluminance\tcontrast\tstructure\tcolor\t"
      "encode_ms\tdecode_ms\tstream_bytes\n";
  for (const auto& ev : result.images) {
    out += row(ev.name, ev.metrics, ev.encode_ms, ev.decode_ms, std::to_string(ev.stream_bytes));
  }
  out += row("mean", result.mean, result.mean_encode_ms, result.mean_decode_ms, "");
  return out;
}

std::string format_json(const EvaluationResult& result) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& ev : result.images) {
    images.push_back({{"image", ev.name},
                      {"metrics", metrics_json(ev.metrics)},
                      {"encode_ms", ev.encode_ms},
                      {"decode_ms", ev.decode_ms},
                      {"stream_bytes", ev.stream_bytes}});
  }
  const nlohmann::json doc = {{"mode", mode_name(result.mode)},
                              {"entropy_coding", result.entropy_coding},
                              {"count", result.images.size()},
                              {"mean", metrics_json(result.mean)},
                              {"mean_encode_ms", result.mean_encode_ms},
                              {"mean_decode_ms", result.mean_decode_ms},
                              {"mean_bpp", result.mean_bpp},
                              {"mean_compression_ratio", result.mean_ratio},
                              {"images", images}};
  return doc.dump(2) + '\n';
}

std::string format_summary(const EvaluationResult& result, const PublishedFigures& p) {
  const bool m1 = result.mode == ReconstructionMode::kM1Only;
  const MetricReport& m = result.mean;
  std::string out;
  out += std::string("mode ") + mode_name(result.mode) + ", " +
         std::to_string(result.images.size()) + " images, " +
         (result.entropy_coding ? "huffman" : "raw") + " latents\n";
  out += "PSNR/C-SSIM/MS-SSIM  measured " + num(m.psnr_db, 2) + "/" + num(m.c_ssim, 4) + "/" +
         num(m.ms_ssim, 4) + "  published " +
         num(m1 ? p.m1_psnr_db : p.fused_psnr_db, 2) + "/" + num(m1 ? p.m1_cssim : p.fused_cssim, 4) +
         "/" + num(m1 ? p.m1_ms_ssim : p.fused_ms_ssim, 4) + "\n";
  out += "bit rate             measured " + num(result.mean_bpp, 3) + " bpp (" +
         num(result.mean_ratio, 2) + ":1 incl. header)  published " + num(p.bpp, 2) + " bpp\n";
  out += "encode/decode        measured " + num(result.mean_encode_ms, 2) + "/" +
         num(result.mean_decode_ms, 2) + " ms  published " +
         num(m1 ? p.m1_encode_ms : p.fused_encode_ms, 2) + "/" +
         num(m1 ? p.m1_decode_ms : p.fused_decode_ms, 2) + " ms (GPU)\n";
  return out;
}

}  // namespace rdae
