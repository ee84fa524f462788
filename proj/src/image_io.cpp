#include "rdae/image_io.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "rdae/bytes.hpp"
#include "rdae/log.hpp"
#include "rdae/model.hpp"

namespace rdae {
namespace {

Tensor from_rgb8(const std::uint8_t* rgb, std::size_t height, std::size_t width) {
  Tensor t(Shape{height, width, 3});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rgb[i]) / 255.0f;
  return t;
}

Tensor decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(Errc::kDecode, "cannot decode PNG '" + path + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::kDecode, "cannot decode PNG '" + path + "': " + msg);
  }
  return from_rgb8(rgb.data(), image.height, image.width);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Tensor decode_jpeg(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> rgb;
  std::size_t height = 0;
  std::size_t width = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::kDecode, "cannot decode JPEG '" + path + "': " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  height = cinfo.output_height;
  width = cinfo.output_width;
  rgb.resize(height * width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_rgb8(rgb.data(), height, width);
}

}  // namespace

LoadedImage read_image(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  LoadedImage out;
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) {
    out.pixels = decode_png(bytes, path);
    out.format = ImageFormat::kPng;
  } else if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    out.pixels = decode_jpeg(bytes, path);
    out.format = ImageFormat::kJpeg;
  } else {
    throw Error(Errc::kDecode, "'" + path + "' is not a PNG or JPEG image");
  }
  if (out.pixels.height() == 0 || out.pixels.width() == 0) {
    throw Error(Errc::kDecode, "'" + path + "' has no pixels");
  }
  return out;
}

void write_png(const std::string& path, const Tensor& image) {
  require_hwc(image.shape(), "write_png");
  if (image.channels() != 3) {
    throw Error(Errc::kShape, "write_png needs an RGB image, got " + image.shape().str());
  }
  std::vector<std::uint8_t> rgb(image.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(Errc::kIo, std::string("PNG encoding failed: ") + png.message);
  }
  std::vector<std::uint8_t> encoded(size);
  if (!png_image_write_to_memory(&png, encoded.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(Errc::kIo, std::string("PNG encoding failed: ") + png.message);
  }
  encoded.resize(size);
  write_file(path, encoded);
}

Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width) {
  require_hwc(image.shape(), "resize_bilinear");
  if (height == 0 || width == 0) throw Error(Errc::kInvalidArg, "resize to an empty image");
  const std::size_t ih = image.height();
  const std::size_t iw = image.width();
  const std::size_t c = image.channels();
  if (ih == height && iw == width) return image;
  Tensor out(Shape{height, width, c});
  const double sy = static_cast<double>(ih) / height;
  const double sx = static_cast<double>(iw) / width;
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(ih - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, ih - 1);
    const double wy = fy - y0;
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(iw - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, iw - 1);
      const double wx = fx - x0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = (1 - wx) * image.at(y0, x0, ch) + wx * image.at(y0, x1, ch);
        const double bottom = (1 - wx) * image.at(y1, x0, ch) + wx * image.at(y1, x1, ch);
        out.at(y, x, ch) = static_cast<float>((1 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

Tensor load_network_image(const std::string& path, bool warn) {
  LoadedImage img = read_image(path);
  if (warn && img.lossy()) {
    log_warning("'" + path + "' is lossy-compressed (JPEG); quality metrics against it "
                "include its existing coding artefacts");
  }
  if (img.pixels.height() != kImageSize || img.pixels.width() != kImageSize) {
    if (warn) {
      log_warning("'" + path + "' is " + std::to_string(img.pixels.width()) + "x" +
                  std::to_string(img.pixels.height()) + "; resizing to 128x128");
    }
    return resize_bilinear(img.pixels, kImageSize, kImageSize);
  }
  return std::move(img.pixels);
}

}  // namespace rdae
