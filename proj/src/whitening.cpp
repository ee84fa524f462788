#include "rdae/whitening.hpp"

#include <Eigen/Dense>

#include "rdae/log.hpp"

namespace rdae {
namespace {

void require_rgb(const Tensor& image, const char* what) {
  require_hwc(image.shape(), what);
  if (image.channels() != 3) {
    throw Error(Errc::kShape, std::string(what) + ": expected 3 channels, got " +
                                  image.shape().str());
  }
}

Tensor transform_pixels(const Tensor& image, const std::array<double, 9>& m,
                        const std::array<double, 3>& pre, const std::array<double, 3>& post) {
  Tensor out(image.shape());
  const std::size_t n = image.height() * image.width();
  for (std::size_t p = 0; p < n; ++p) {
    const float* src = image.raw() + 3 * p;
    float* dst = out.raw() + 3 * p;
    const double x0 = src[0] - pre[0];
    const double x1 = src[1] - pre[1];
    const double x2 = src[2] - pre[2];
    for (int r = 0; r < 3; ++r) {
      dst[r] = static_cast<float>(m[3 * r] * x0 + m[3 * r + 1] * x1 + m[3 * r + 2] * x2 +
                                  post[r]);
    }
  }
  return out;
}

}  // namespace

Tensor WhiteningTransform::apply(const Tensor& image) const {
  require_rgb(image, "whitening apply");
  return transform_pixels(image, matrix, mean, {0.0, 0.0, 0.0});
}

Tensor WhiteningTransform::invert(const Tensor& whitened) const {
  require_rgb(whitened, "whitening invert");
  return transform_pixels(whitened, inverse, {0.0, 0.0, 0.0}, mean);
}

std::array<double, 9> channel_covariance(std::span<const Tensor> images) {
  std::array<double, 3> sum{};
  std::array<double, 9> prod{};
  double count = 0;
  for (const Tensor& img : images) {
    require_rgb(img, "channel covariance");
    const std::size_t n = img.height() * img.width();
    for (std::size_t p = 0; p < n; ++p) {
      const float* px = img.raw() + 3 * p;
      for (int i = 0; i < 3; ++i) {
        sum[i] += px[i];
        for (int j = 0; j < 3; ++j) prod[3 * i + j] += static_cast<double>(px[i]) * px[j];
      }
    }
    count += static_cast<double>(n);
  }
  if (count == 0) throw Error(Errc::kEmpty, "channel covariance of an empty image set");
  std::array<double, 9> cov{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      cov[3 * i + j] = prod[3 * i + j] / count - (sum[i] / count) * (sum[j] / count);
  return cov;
}

WhiteningFit whitening_fit(std::span<const Tensor> images, double epsilon) {
  if (images.empty()) throw Error(Errc::kEmpty, "whitening fit needs at least one image");
  if (!(epsilon > 0)) throw Error(Errc::kInvalidArg, "whitening epsilon must be positive");

  std::array<double, 3> sum{};
  double count = 0;
  for (const Tensor& img : images) {
    require_rgb(img, "whitening fit");
    const std::size_t n = img.height() * img.width();
    for (std::size_t p = 0; p < n; ++p)
      for (int i = 0; i < 3; ++i) sum[i] += img.raw()[3 * p + i];
    count += static_cast<double>(n);
  }
  const std::array<double, 9> cov_arr = channel_covariance(images);

  Eigen::Matrix3d cov;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cov(i, j) = cov_arr[3 * i + j];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Eigen::Vector3d lambda = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::Matrix3d& e = eig.eigenvectors();

  WhiteningFit fit;
  fit.degenerate = lambda.minCoeff() <= 1e-9 * std::max(lambda.maxCoeff(), 1e-300);
  if (fit.degenerate) {
    log_warning("whitening: channel covariance is rank deficient; epsilon floor " +
                std::to_string(epsilon) + " applied");
  }
  const Eigen::Vector3d shrink = (lambda.array() + epsilon).rsqrt();
  const Eigen::Vector3d grow = (lambda.array() + epsilon).sqrt();
  const Eigen::Matrix3d w = e * shrink.asDiagonal() * e.transpose();
  const Eigen::Matrix3d w_inv = e * grow.asDiagonal() * e.transpose();

  WhiteningTransform& t = fit.transform;
  t.epsilon = epsilon;
  for (int i = 0; i < 3; ++i) {
    t.mean[i] = sum[i] / count;
    for (int j = 0; j < 3; ++j) {
      t.matrix[3 * i + j] = w(i, j);
      t.inverse[3 * i + j] = w_inv(i, j);
    }
  }
  return fit;
}

}  // namespace rdae
