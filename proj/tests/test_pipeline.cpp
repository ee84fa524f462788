#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <cstdio>

#include <jpeglib.h>
#include <fstream>
#include <limits>

#include "rdae/bitstream.hpp"
#include "rdae/config.hpp"
#include "rdae/dataset.hpp"
#include "rdae/evaluation.hpp"
#include "rdae/image_io.hpp"
#include "rdae/log.hpp"
#include "rdae/model_io.hpp"
#include "rdae/report.hpp"
#include "rdae/synthetic.hpp"
#include "rdae/training.hpp"
#include "support.hpp"

using namespace rdae;

namespace {

struct CapturedLog {
  std::vector<std::string> warnings;
  LogSink old;
  CapturedLog() {
    old = set_log_sink([this](LogLevel l, const std::string& m) {
      if (l == LogLevel::kWarning) warnings.push_back(m);
    });
  }
  ~CapturedLog() { set_log_sink(old); }
};

void write_jpeg(const std::string& path, const Tensor& img) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  jpeg_compress_struct c{};
  jpeg_error_mgr err{};
  c.err = jpeg_std_error(&err);
  jpeg_create_compress(&c);
  jpeg_stdio_dest(&c, f);
  c.image_width = static_cast<JDIMENSION>(img.width());
  c.image_height = static_cast<JDIMENSION>(img.height());
  c.input_components = 3;
  c.in_color_space = JCS_RGB;
  jpeg_set_defaults(&c);
  jpeg_set_quality(&c, 95, TRUE);
  jpeg_start_compress(&c, TRUE);
  std::vector<std::uint8_t> row(img.width() * 3);
  while (c.next_scanline < c.image_height) {
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = static_cast<std::uint8_t>(std::lround(img[c.next_scanline * row.size() + i] * 255));
    JSAMPROW p = row.data();
    jpeg_write_scanlines(&c, &p, 1);
  }
  jpeg_finish_compress(&c);
  jpeg_destroy_compress(&c);
  std::fclose(f);
}

PhaseSettings quick(std::size_t epochs, std::size_t batch = 2) {
  PhaseSettings s;
  s.epochs = epochs;
  s.batch_size = batch;
  s.seed = 99;
  return s;
}

std::vector<std::uint8_t> params_of(const EncoderParams& e, const DecoderParams& d) {
  std::vector<std::uint8_t> out;
  auto add = [&](const Param<float>& p) {
    const auto* b = reinterpret_cast<const std::uint8_t*>(p.value.raw());
    out.insert(out.end(), b, b + p.value.size() * sizeof(float));
  };
  e.for_each_param(add);
  d.for_each_param(add);
  return out;
}

}  // namespace

TEST_CASE("split apportionment") {
  CHECK(train_count(100) == 81);
  CHECK(train_count(27556) == 22222);
  CHECK(train_count(1) == 1);
  CHECK(train_count(10) == 8);
  CHECK(train_count(0) == 0);
}

TEST_CASE("image io") {
  testing::TempDir dir("io");
  const Tensor img = synthetic_cell(1, 0, CellClass::kParasitized, 40, 56);
  write_png(dir.str("a.png"), img);
  const LoadedImage back = read_image(dir.str("a.png"));
  CHECK_FALSE(back.lossy());
  CHECK(back.pixels.shape() == Shape{40, 56, 3});
  CHECK(testing::max_abs_diff(back.pixels, img) <= 0.5 / 255 + 1e-6);

  write_jpeg(dir.str("b.jpg"), img);
  CapturedLog log;
  const Tensor j = load_network_image(dir.str("b.jpg"));
  CHECK(j.shape() == image_shape());
  CHECK(log.warnings.size() == 2);  // lossy source and resize
  CHECK(read_image(dir.str("b.jpg")).lossy());

  std::ofstream(dir.str("c.png")) << "not an image";
  try {
    read_image(dir.str("c.png"));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDecode);
  }
}

TEST_CASE("bilinear resize") {
  Tensor t(Shape{2, 2, 1}, std::vector<float>{0, 1, 2, 3});
  const Tensor same = resize_bilinear(t, 2, 2);
  CHECK(same == t);
  const Tensor up = resize_bilinear(t, 4, 4);
  // Half-pixel centres: output (0,0) samples input (-0.25,-0.25) -> clamped to 0.
  CHECK(up.at(0, 0, 0) == 0.0f);
  // (1,1) samples (0.25, 0.25): 0.75 * (0.75*0 + 0.25*1) + 0.25 * (0.75*2 + 0.25*3).
  CHECK(up.at(1, 1, 0) == doctest::Approx(0.75));
  CHECK(up.at(3, 3, 0) == 3.0f);
  const Tensor down = resize_bilinear(Tensor(Shape{4, 4, 3}, 0.3f), 2, 2);
  for (float v : down.data()) CHECK(v == doctest::Approx(0.3f));
}

TEST_CASE("dataset ingestion") {
  testing::TempDir dir("ds");
  write_synthetic_dataset(dir.path(), 20, 3);
  std::ofstream(dir.path() / "Parasitized" / "notes.txt") << "hello";
  CapturedLog log;
  const DatasetIndex a = ingest_dataset(dir.path(), 7);
  CHECK(a.items.size() == 20);
  REQUIRE(a.skipped.size() == 1);
  CHECK(a.skipped[0].path.filename() == "notes.txt");
  CHECK(log.warnings.size() == 1);
  CHECK(a.count(Split::kTrain) == train_count(20));
  CHECK(a.count(Split::kTest) == 20 - train_count(20));
  std::size_t parasitized = 0;
  for (const auto& item : a.items) parasitized += item.label == CellClass::kParasitized;
  CHECK(parasitized == 10);
  CHECK(std::is_sorted(a.items.begin(), a.items.end(),
                       [](const auto& x, const auto& y) { return x.path < y.path; }));

  const DatasetIndex b = ingest_dataset(dir.path(), 7);
  const DatasetIndex c = ingest_dataset(dir.path(), 8);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    same = same && a.items[i].split == b.items[i].split;
    differs = differs || a.items[i].split != c.items[i].split;
  }
  CHECK(same);
  CHECK(differs);

  const auto images = load_images(a.split(Split::kTest));
  CHECK(images.size() == a.count(Split::kTest));
  for (const auto& img : images) CHECK(img.shape() == image_shape());

  testing::TempDir empty("empty");
  try {
    ingest_dataset(empty.path(), 1);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kEmpty);
  }
  CHECK_THROWS_AS(ingest_dataset(empty.path() / "nope", 1), Error);
}

TEST_CASE("config parsing") {
  const TrainConfig c = parse_config(
      "# comment\n"
      "dataset_root = /data/cells\n"
      "epochs_m1 = 3  # trailing\n"
      "epochs_m2=4\n"
      "epochs_m3 = 5\n"
      "batch_size = 2\n"
      "learning_rate = 0.01\n"
      "beta1 = 0.8\n"
      "beta2 = 0.99\n"
      "epsilon = 1e-7\n"
      "seed = 77\n"
      "whitening = on\n"
      "model_out = out.rdam\n");
  CHECK(c.dataset_root == "/data/cells");
  CHECK(c.epochs_m1 == 3);
  CHECK(c.epochs_m2 == 4);
  CHECK(c.epochs_m3 == 5);
  CHECK(c.batch_size == 2);
  CHECK(c.adam.learning_rate == 0.01);
  CHECK(c.adam.beta1 == 0.8);
  CHECK(c.adam.beta2 == 0.99);
  CHECK(c.adam.epsilon == 1e-7);
  CHECK(c.seed == 77);
  CHECK(c.whitening);
  CHECK(c.model_out == "out.rdam");

  const TrainConfig d = parse_config("");
  CHECK(d.epochs_m1 == 100);
  CHECK(d.batch_size == 8);
  CHECK(d.adam.learning_rate == 0.001);

  auto fails_with = [](const std::string& text, const std::string& needle) {
    try {
      parse_config(text);
      return false;
    } catch (const Error& e) {
      return e.code() == Errc::kConfig && std::string(e.what()).find(needle) != std::string::npos;
    }
  };
  CHECK(fails_with("seed = 1\nepoch_m1 = 3\n", "epoch_m1"));
  CHECK(fails_with("seed = 1\nepoch_m1 = 3\n", "line 2"));
  CHECK(fails_with("batch_size = 0\n", "batch_size"));
  CHECK(fails_with("seed = abc\n", "seed"));
  CHECK(fails_with("seed = 1\nseed = 2\n", "duplicate"));
  CHECK(fails_with("just words\n", "line 1"));
  CHECK(fails_with("beta1 = 1.5\n", "beta1"));
}

TEST_CASE("training phases") {
  const std::vector<Tensor> images = synthetic_images(4, 11);
  DualModel model = DualModel::initialize(21);

  SUBCASE("loss falls and epochs are reported") {
    std::vector<EpochReport> seen;
    const auto reports = train_m1(model, images, quick(10), [&](const EpochReport& r) { seen.push_back(r); });
    REQUIRE(reports.size() == 10);
    CHECK(seen.size() == 10);
    CHECK(reports.back().mean_loss < reports.front().mean_loss);
    for (const auto& r : reports) {
      CHECK(r.mean_loss >= 0);
      CHECK(r.phase == Phase::kM1);
    }
    CHECK(format_epoch_report(reports[0]).rfind("M1\t1\t", 0) == 0);
    CHECK((model.trained_phases & kPhaseM1) != 0);
  }

  SUBCASE("phases leave earlier stacks untouched") {
    train_m1(model, images, quick(1));
    const auto m1 = params_of(model.m1_encoder, model.m1_decoder);
    const auto m2_before = params_of(model.m2_encoder, model.m2_decoder);
    train_m2(model, images, quick(1));
    CHECK(params_of(model.m1_encoder, model.m1_decoder) == m1);
    const auto m2 = params_of(model.m2_encoder, model.m2_decoder);
    CHECK(m2 != m2_before);
    warm_start_m3(model);
    train_m3(model, images, quick(1));
    CHECK(params_of(model.m1_encoder, model.m1_decoder) == m1);
    CHECK(params_of(model.m2_encoder, model.m2_decoder) == m2);
    CHECK(model.trained_phases == (kPhaseM1 | kPhaseM2 | kPhaseM3));
  }

  SUBCASE("warm start reproduces the M1 reconstruction") {
    train_m1(model, images, quick(1));
    warm_start_m3(model);
    const LatentPair lp = analyze(images[0], model);
    CHECK(fuse_and_decode(lp.ls1, lp.ls2, model.m3_fusion, model.m3_decoder) ==
          decode(lp.ls1, model.m1_decoder));
  }

  SUBCASE("fixed seed gives bit-identical models") {
    TrainConfig cfg;
    cfg.epochs_m1 = cfg.epochs_m2 = cfg.epochs_m3 = 1;
    cfg.batch_size = 3;
    cfg.seed = 5;
    cfg.whitening = true;
    const DualModel a = train_dual(cfg, images);
    const DualModel b = train_dual(cfg, images);
    CHECK(serialize_model(a) == serialize_model(b));
    CHECK(a.whitening.has_value());
  }

  SUBCASE("non-finite loss names phase, epoch and batch") {
    std::vector<Tensor> bad = images;
    bad[2][0] = std::numeric_limits<float>::quiet_NaN();
    try {
      train_m1(model, bad, quick(1, 1));
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kNumeric);
      const std::string msg = e.what();
      CHECK(msg.find("M1") != std::string::npos);
      CHECK(msg.find("epoch 1") != std::string::npos);
      CHECK(msg.find("batch") != std::string::npos);
    }
  }

  SUBCASE("invalid settings") {
    CHECK_THROWS_AS(train_m1(model, images, quick(0)), Error);
    CHECK_THROWS_AS(train_m1(model, {}, quick(1)), Error);
  }
}

TEST_CASE("evaluation and reports") {
  const std::vector<Tensor> images = synthetic_images(2, 4);
  const DualModel model = DualModel::initialize(2);
  const std::vector<std::string> names = {"a.png", "b.png"};

  EvaluationOptions opts;
  opts.mode = ReconstructionMode::kM1Only;
  const EvaluationResult m1 = evaluate(model, images, names, opts);
  CHECK(m1.images.size() == 2);
  CHECK(m1.images[0].metrics.psnr_db ==
        doctest::Approx(psnr(images[0], reconstruct(model, images[0], ReconstructionMode::kM1Only))));

  opts.mode = ReconstructionMode::kFused;
  const EvaluationResult fused = evaluate(model, images, names, opts);
  const EvaluationResult again = evaluate(model, images, names, opts);
  CHECK(fused.mean.psnr_db == again.mean.psnr_db);
  CHECK(fused.mean.c_ssim == again.mean.c_ssim);
  CHECK(fused.images[1].stream_bytes == Bitstream::kFixedHeaderBytes + 8192 + Bitstream::kCrcBytes);
  CHECK(fused.mean_ratio == doctest::Approx(49152.0 / fused.images[0].stream_bytes));

  const std::string tsv = format_tsv(fused);
  CHECK(tsv.rfind("image\tpsnr_db\tc_ssim\tms_ssim\tssim", 0) == 0);
  CHECK(tsv.find("\nmean\t") != std::string::npos);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 4);
  const std::string json = format_json(fused);
  CHECK(json.find("\"mean_bpp\"") != std::string::npos);
  CHECK(json.find("\"b.png\"") != std::string::npos);
  const std::string summary = format_summary(fused);
  CHECK(summary.find("35.91") != std::string::npos);
  CHECK(summary.find("1.40 bpp") != std::string::npos);

  CHECK_THROWS_AS(evaluate(model, std::vector<Tensor>{}, {}, opts), Error);
}
