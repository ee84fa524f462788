#include "rdae/model_io.hpp"

#include <cstring>

#include "rdae/bytes.hpp"

namespace rdae {
namespace {

constexpr char kMagic[4] = {'R', 'D', 'A', 'M'};
constexpr std::uint8_t kWhiteningFlag = 1u << 3;
constexpr std::uint8_t kPhaseMask = kPhaseM1 | kPhaseM2 | kPhaseM3;

constexpr std::size_t kWhiteningBytes = 22 * 8;

std::size_t serialized_size(bool with_whitening) {
  static const std::size_t params = [] {
    std::size_t n = 0;
    DualModel::initialize(0).for_each_param([&](const Param<float>& p) {
      n += 1 + 4 * p.value.shape().rank() + 4 * p.value.size();
    });
    return n;
  }();
  return 4 + 1 + 8 + 1 + 4 + params + (with_whitening ? kWhiteningBytes : 0) + 4;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const DualModel& model) {
  ByteWriter w;
  w.text(kMagic, 4);
  w.u8(DualModel::kFormatVersion);
  w.u64(model.seed);
  std::uint8_t flags = model.trained_phases & kPhaseMask;
  if (model.whitening) flags |= kWhiteningFlag;
  w.u8(flags);

  std::uint32_t count = 0;
  model.for_each_param([&](const Param<float>&) { ++count; });
  w.u32(count);
  model.for_each_param([&](const Param<float>& p) {
    const Shape& s = p.value.shape();
    w.u8(static_cast<std::uint8_t>(s.rank()));
    for (std::size_t d : s.dims()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : p.value.data()) w.f32(v);
  });

  if (model.whitening) {
    const WhiteningTransform& t = *model.whitening;
    for (double v : t.mean) w.f64(v);
    for (double v : t.matrix) w.f64(v);
    for (double v : t.inverse) w.f64(v);
    w.f64(t.epsilon);
  }
  w.u32(crc32(w.buffer()));
  return w.take();
}

DualModel parse_model(std::span<const std::uint8_t> bytes) {
  ByteReader header(bytes);
  auto magic = header.bytes(4, "model magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw Error(Errc::kFormat, "not a model file (bad magic)");
  }
  const std::uint8_t version = header.u8("model version");
  if (version != DualModel::kFormatVersion) {
    throw Error(Errc::kVersion, "model format version " + std::to_string(version) +
                                    " is not supported (expected " +
                                    std::to_string(DualModel::kFormatVersion) + ")");
  }
  header.u64("model seed");
  const std::size_t expected_size = serialized_size(header.u8("model flags") & kWhiteningFlag);
  if (bytes.size() < expected_size) {
    throw Error(Errc::kTruncated, "model file is " + std::to_string(bytes.size()) +
                                      " bytes, expected " + std::to_string(expected_size));
  }
  if (bytes.size() > expected_size) {
    throw Error(Errc::kFormat, std::to_string(bytes.size() - expected_size) +
                                   " unexpected trailing bytes in model file");
  }
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.subspan(bytes.size() - 4));
  if (crc32(body) != tail.u32("model checksum")) {
    throw Error(Errc::kChecksum, "model file checksum mismatch");
  }

  ByteReader r(body);
  r.bytes(5, "model magic");
  DualModel model = DualModel::initialize(0);
  model.seed = r.u64("model seed");
  const std::uint8_t flags = r.u8("model flags");
  if (flags & ~(kPhaseMask | kWhiteningFlag)) {
    throw Error(Errc::kFormat, "model flags contain unknown bits");
  }
  model.trained_phases = flags & kPhaseMask;

  std::uint32_t expected = 0;
  model.for_each_param([&](const Param<float>&) { ++expected; });
  const std::uint32_t count = r.u32("model tensor count");
  if (count != expected) {
    throw Error(Errc::kFormat, "model holds " + std::to_string(count) +
                                   " tensors, expected " + std::to_string(expected));
  }
  model.for_each_param([&](Param<float>& p) {
    const std::size_t rank = r.u8("tensor rank");
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = r.u32("tensor dims");
    if (Shape(dims) != p.value.shape()) {
      throw Error(Errc::kFormat, "model tensor has shape " + Shape(dims).str() +
                                     ", expected " + p.value.shape().str());
    }
    for (auto& v : p.value.data()) v = r.f32("tensor values");
    p.zero_grad();
    p.reset_optimizer();
  });

  if (flags & kWhiteningFlag) {
    WhiteningTransform t;
    for (double& v : t.mean) v = r.f64("whitening mean");
    for (double& v : t.matrix) v = r.f64("whitening matrix");
    for (double& v : t.inverse) v = r.f64("whitening inverse");
    t.epsilon = r.f64("whitening epsilon");
    model.whitening = t;
  }
  return model;
}

void save_model(const DualModel& model, const std::string& path) {
  write_file(path, serialize_model(model));
}

DualModel load_model(const std::string& path) { return parse_model(read_file(path)); }

std::uint32_t model_checksum(const DualModel& model) {
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  ByteReader r(std::span<const std::uint8_t>(bytes).subspan(bytes.size() - 4));
  return r.u32("model checksum");
}

}  // namespace rdae
