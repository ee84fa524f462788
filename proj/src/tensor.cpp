#include "rdae/tensor.hpp"

#include <cmath>

namespace rdae {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kShape: return "shape";
    case Errc::kInvalidArg: return "invalid-argument";
    case Errc::kIo: return "io";
    case Errc::kDecode: return "decode";
    case Errc::kConfig: return "config";
    case Errc::kEmpty: return "empty";
    case Errc::kNumeric: return "numeric";
    case Errc::kTruncated: return "truncated";
    case Errc::kFormat: return "format";
    case Errc::kVersion: return "version";
    case Errc::kChecksum: return "checksum";
    case Errc::kModelMismatch: return "model-mismatch";
    case Errc::kSymbol: return "symbol";
  }
  return "unknown";
}

std::string Shape::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw Error(Errc::kShape, std::string(what) + ": shape " + a.str() +
                                  " does not match " + b.str());
  }
}

void require_hwc(const Shape& s, const char* what) {
  if (s.rank() != 3) {
    throw Error(Errc::kShape,
                std::string(what) + ": expected an HxWxC tensor, got " + s.str());
  }
}

template <typename T>
bool all_finite(const BasicTensor<T>& t) {
  for (T v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template bool all_finite(const BasicTensor<float>&);
template bool all_finite(const BasicTensor<double>&);

}  // namespace rdae
