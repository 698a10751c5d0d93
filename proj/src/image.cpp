#include "eigenspine/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include <png.h>

#include "eigenspine/error.hpp"

namespace eigenspine {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return f;
}

void png_error_fn(png_structp, png_const_charp msg) { throw Error(ErrorCode::kIo, msg); }
void png_warning_fn(png_structp, png_const_charp) {}

void write_rows(png_structp png, png_infop info, const Raster& r) {
  png_set_IHDR(png, info, r.width, r.height, 8,
               r.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(r.width) * r.channels;
  for (int y = 0; y < r.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(r.data.data() + y * stride));
  }
  png_write_end(png, nullptr);
}

void append_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kEmptyImage, "image has zero size");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kEmptyImage, "image has zero size");
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidArgument, "pixel count does not match width*height");
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 255.0)) {
      throw Error(ErrorCode::kInvalidArgument, "intensity outside [0, 255]");
    }
  }
}

GrayImage grayscale(const Raster& r) {
  if (r.width <= 0 || r.height <= 0 || r.data.empty()) {
    throw Error(ErrorCode::kEmptyImage, "cannot convert an empty raster");
  }
  if (r.channels != 1 && r.channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "raster must have 1 or 3 channels");
  }
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  if (r.data.size() != n * r.channels) {
    throw Error(ErrorCode::kInvalidArgument, "raster buffer size mismatch");
  }
  std::vector<double> px(n);
  if (r.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) px[i] = r.data[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = 0.299 * r.data[3 * i] + 0.587 * r.data[3 * i + 1] + 0.114 * r.data[3 * i + 2];
    }
  }
  return GrayImage(r.width, r.height, std::move(px));
}

GrayImage resize_bilinear(const GrayImage& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  GrayImage out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const double top = src.at(x0, y0) * (1 - wx) + src.at(x1, y0) * wx;
      const double bottom = src.at(x0, y1) * (1 - wx) + src.at(x1, y1) * wx;
      out.at(x, y) = top * (1 - wy) + bottom * wy;
    }
  }
  return out;
}

Raster to_raster(const GrayImage& image) {
  Raster r{image.width(), image.height(), 1, {}};
  r.data.resize(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    r.data[i] = static_cast<std::uint8_t>(std::clamp(std::round(image.pixels()[i]), 0.0, 255.0));
  }
  return r;
}

Raster read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                           png_warning_fn);
  png_infop info = png_create_info_struct(png);
  Raster out;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    out.data.resize(stride * out.height);
    for (int y = 0; y < out.height; ++y) png_read_row(png, out.data.data() + y * stride, nullptr);
  } catch (const Error& e) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, path.string() + ": " + e.detail());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

ImageSize read_png_size(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                           png_warning_fn);
  png_infop info = png_create_info_struct(png);
  ImageSize size;
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    size.width = static_cast<int>(png_get_image_width(png, info));
    size.height = static_cast<int>(png_get_image_height(png, info));
  } catch (const Error& e) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, path.string() + ": " + e.detail());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return size;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  const Raster r = to_raster(image);
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                            png_warning_fn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, file.get());
    write_rows(png, info, r);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  const Raster r = to_raster(image);
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                            png_warning_fn);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, append_to_vector, nullptr);
    write_rows(png, info, r);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace eigenspine
