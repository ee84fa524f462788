#pragma once

#include <string>

#include "rdae/tensor.hpp"

namespace rdae {

enum class ImageFormat { kPng, kJpeg };

struct LoadedImage {
  Tensor pixels;  // HxWx3, values in [0, 1]
  ImageFormat format = ImageFormat::kPng;
  bool lossy() const noexcept { return format == ImageFormat::kJpeg; }
};

// Reads a PNG (any bit depth / colour type, converted to 8-bit RGB) or a
// JPEG. Throws Errc::kIo when the file cannot be opened and Errc::kDecode
// when its contents are not a decodable image.
LoadedImage read_image(const std::string& path);

// Writes an HxWx3 image as 8-bit RGB PNG; values are clamped to [0, 1] and
// rounded to the nearest level.
void write_png(const std::string& path, const Tensor& image);

// Bilinear resampling with half-pixel centres (sample x maps to
// (x + 0.5) * in / out - 0.5, edges clamped).
Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width);

// Reads an image and resizes it to the network's 128x128 input when needed.
// Warnings for lossy sources and resizing go to the log when `warn` is set.
Tensor load_network_image(const std::string& path, bool warn = true);

}  // namespace rdae
