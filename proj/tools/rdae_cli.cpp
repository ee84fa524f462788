// rdae: train, compress, decompress, evaluate, inspect, gradcheck.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 integrity error (checksum, format, truncation, version, model mismatch).

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "rdae/bytes.hpp"
#include "rdae/codec.hpp"
#include "rdae/config.hpp"
#include "rdae/dataset.hpp"
#include "rdae/error.hpp"
#include "rdae/evaluation.hpp"
#include "rdae/gradcheck.hpp"
#include "rdae/image_io.hpp"
#include "rdae/model_io.hpp"
#include "rdae/report.hpp"
#include "rdae/training.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kIntegrity = 3 };

int exit_for(rdae::Errc code) {
  using rdae::Errc;
  switch (code) {
    case Errc::kConfig:
    case Errc::kInvalidArg:
      return kUsage;
    case Errc::kTruncated:
    case Errc::kFormat:
    case Errc::kVersion:
    case Errc::kChecksum:
    case Errc::kModelMismatch:
    case Errc::kSymbol:
      return kIntegrity;
    default:
      return kData;
  }
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  rdae::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void print_stats(const rdae::Bitstream& stream) {
  const rdae::StreamStats s = rdae::stream_stats(stream);
  std::cout << "stream bytes: " << s.total_bytes << " (payload " << s.payload_bytes << ")\n"
            << "bit rate: " << fmt("%.4f", s.bpp) << " bpp\n"
            << "compression ratio: " << fmt("%.2f", s.compression_ratio)
            << ":1 including header\n"
            << "compression ratio: " << fmt("%.2f", s.payload_ratio) << ":1 excluding header\n";
}

struct TrainArgs {
  std::string config;
};

int cmd_train(const TrainArgs& a) {
  rdae::TrainConfig cfg;
  try {
    cfg = rdae::load_config(a.config);
  } catch (const rdae::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (cfg.dataset_root.empty()) {
    std::cerr << "error: config does not set dataset_root\n";
    return kUsage;
  }
  const rdae::DatasetIndex index = rdae::ingest_dataset(cfg.dataset_root, cfg.seed);
  const auto train_items = index.split(rdae::Split::kTrain);
  const auto test_items = index.split(rdae::Split::kTest);
  std::cout << "dataset: " << index.items.size() << " images (" << train_items.size()
            << " train, " << test_items.size() << " test), " << index.skipped.size()
            << " skipped\n";
  const auto train_images = rdae::load_images(train_items);

  const std::string log_path = cfg.model_out + ".log";
  std::ofstream log(log_path);
  if (!log) throw rdae::Error(rdae::Errc::kIo, "cannot write training log '" + log_path + "'");
  log << "phase\tepoch\tmean_loss\tseconds\n";
  const rdae::DualModel model = rdae::train_dual(cfg, train_images, [&](const rdae::EpochReport& r) {
    const std::string line = rdae::format_epoch_report(r);
    log << line << '\n';
    log.flush();
    std::cout << line << '\n';
  });
  rdae::save_model(model, cfg.model_out);
  std::cout << "model written to " << cfg.model_out << " (checksum "
            << hex32(rdae::model_checksum(model)) << ")\n";

  if (!test_items.empty()) {
    const auto test_images = rdae::load_images(test_items);
    std::vector<std::string> names;
    for (const auto& item : test_items) names.push_back(item.path.filename().string());
    for (auto mode : {rdae::ReconstructionMode::kM1Only, rdae::ReconstructionMode::kFused}) {
      rdae::EvaluationOptions opts;
      opts.mode = mode;
      std::cout << rdae::format_summary(rdae::evaluate(model, test_images, names, opts));
    }
  }
  return kOk;
}

struct CompressArgs {
  std::string model, input, output;
  bool huffman = false;
  bool raw = false;
  bool additive = false;
  bool fused = false;
};

int cmd_compress(const CompressArgs& a) {
  if (a.huffman && a.raw) throw CLI::ValidationError("--raw and --huffman are exclusive");
  if (a.additive && a.fused) throw CLI::ValidationError("--fused and --additive are exclusive");
  const rdae::DualModel model = rdae::load_model(a.model);
  const rdae::Tensor image = rdae::load_network_image(a.input);
  const rdae::Codec codec(model);
  rdae::CodecOptions opts;
  opts.entropy_coding = a.huffman;
  opts.mode = a.additive ? rdae::ReconstructionMode::kAdditive : rdae::ReconstructionMode::kFused;
  const rdae::Bitstream stream = codec.compress(image, opts);
  rdae::write_file(a.output, rdae::serialize(stream));
  print_stats(stream);
  return kOk;
}

struct DecompressArgs {
  std::string model, input, output;
};

int cmd_decompress(const DecompressArgs& a) {
  const rdae::DualModel model = rdae::load_model(a.model);
  const rdae::Bitstream stream = rdae::parse_bitstream(rdae::read_file(a.input));
  const rdae::Tensor image = rdae::Codec(model).decompress(stream);
  rdae::write_png(a.output, image);
  std::cout << "wrote " << a.output << " (" << image.width() << "x" << image.height() << ", "
            << (stream.additive() ? "additive" : "fused") << " path)\n";
  return kOk;
}

struct EvaluateArgs {
  std::string model, dataset, mode = "fused", split = "test", tsv, json;
  bool huffman = false;
  bool seed_set = false;
  std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const rdae::ReconstructionMode mode = rdae::parse_mode(a.mode);
  const rdae::DualModel model = rdae::load_model(a.model);
  const std::uint64_t seed = a.seed_set ? a.seed : model.seed;
  const rdae::DatasetIndex index = rdae::ingest_dataset(a.dataset, seed);
  std::vector<rdae::DatasetItem> items =
      a.split == "all" ? index.items
                       : index.split(a.split == "train" ? rdae::Split::kTrain : rdae::Split::kTest);
  if (items.empty()) throw rdae::Error(rdae::Errc::kEmpty, "the " + a.split + " split is empty");
  std::vector<std::string> names;
  for (const auto& item : items) names.push_back(item.path.filename().string());
  const auto images = rdae::load_images(items);
  rdae::EvaluationOptions opts;
  opts.mode = mode;
  opts.entropy_coding = a.huffman;
  const rdae::EvaluationResult result = rdae::evaluate(model, images, names, opts);
  std::cout << rdae::format_tsv(result) << rdae::format_summary(result);
  if (!a.tsv.empty()) write_text(a.tsv, rdae::format_tsv(result));
  if (!a.json.empty()) write_text(a.json, rdae::format_json(result));
  return kOk;
}

int cmd_inspect(const std::string& path) {
  const rdae::Bitstream s = rdae::parse_bitstream(rdae::read_file(path));
  std::cout << "version: " << int(s.version) << "\n"
            << "geometry: " << s.width << "x" << s.height << "x" << int(s.channels) << "\n"
            << "entropy coding: " << (s.huffman() ? "huffman" : "raw") << "\n"
            << "decoder path: " << (s.additive() ? "additive" : "fused") << "\n"
            << "whitened input: " << (s.whitened() ? "yes" : "no") << "\n"
            << "model checksum: " << hex32(s.model_crc) << "\n";
  for (int i = 0; i < 2; ++i) {
    std::cout << "latent " << i + 1 << ": min " << fmt("%.6g", s.quant[i].min) << ", scale "
              << fmt("%.6g", s.quant[i].scale) << ", payload " << s.payload[i].size()
              << " bytes\n";
  }
  print_stats(s);
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances) {
  bool ok = true;
  for (const auto& r : rdae::run_gradcheck(seed, instances)) {
    std::cout << (r.passed() ? "ok   " : "FAIL ") << r.layer << ": max relative error "
              << fmt("%.3e", r.max_rel_error) << " over " << r.entries << " entries, "
              << r.instances << " instances\n";
    ok = ok && r.passed();
  }
  return ok ? kOk : kData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual dual-autoencoder image codec"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train M1, M2 and M3 from a config file");
  train_cmd->add_option("config", train.config, "Config file")->required();

  CompressArgs comp;
  auto* comp_cmd = app.add_subcommand("compress", "Compress one image into a bitstream");
  comp_cmd->add_option("-m,--model", comp.model, "Model file")->required();
  comp_cmd->add_option("-i,--input", comp.input, "Input image (PNG or JPEG)")->required();
  comp_cmd->add_option("-o,--output", comp.output, "Output bitstream")->required();
  comp_cmd->add_flag("--raw", comp.raw, "Store 8-bit latents as is (default)");
  comp_cmd->add_flag("--huffman", comp.huffman, "Huffman-code the latents");
  comp_cmd->add_flag("--fused", comp.fused, "Decode through M3 (default)");
  comp_cmd->add_flag("--additive", comp.additive, "Decode as M1 output plus decoded residual");

  DecompressArgs dec;
  auto* dec_cmd = app.add_subcommand("decompress", "Reconstruct an image from a bitstream");
  dec_cmd->add_option("-m,--model", dec.model, "Model file")->required();
  dec_cmd->add_option("-i,--input", dec.input, "Bitstream")->required();
  dec_cmd->add_option("-o,--output", dec.output, "Output PNG")->required();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Quality and rate report over a dataset split");
  eval_cmd->add_option("-m,--model", eval.model, "Model file")->required();
  eval_cmd->add_option("-d,--dataset", eval.dataset, "Dataset root")->required();
  eval_cmd->add_option("--mode", eval.mode, "m1_only, fused or additive")
      ->check(CLI::IsMember({"m1_only", "fused", "additive"}));
  eval_cmd->add_option("--split", eval.split, "test, train or all")
      ->check(CLI::IsMember({"test", "train", "all"}));
  auto* seed_opt = eval_cmd->add_option("--seed", eval.seed, "Split seed (default: the model's)");
  eval_cmd->add_flag("--huffman", eval.huffman, "Measure rate with Huffman-coded latents");
  eval_cmd->add_option("--tsv", eval.tsv, "Also write the table to this file");
  eval_cmd->add_option("--json", eval.json, "Write a JSON report to this file");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a bitstream's header and size");
  inspect_cmd->add_option("stream", inspect_path, "Bitstream")->required();

  std::uint64_t gc_seed = 1;
  std::size_t gc_instances = 20;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer");
  gc_cmd->add_option("--seed", gc_seed, "Seed for the random problems");
  gc_cmd->add_option("--instances", gc_instances, "Random problems per layer")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train);
    if (*comp_cmd) return cmd_compress(comp);
    if (*dec_cmd) return cmd_decompress(dec);
    if (*eval_cmd) {
      eval.seed_set = seed_opt->count() > 0;
      return cmd_evaluate(eval);
    }
    if (*inspect_cmd) return cmd_inspect(inspect_path);
    if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_instances);
  } catch (const rdae::Error& e) {
    std::cerr << "error (" << rdae::errc_name(e.code()) << "): " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
