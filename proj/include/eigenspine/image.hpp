#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace eigenspine {

/// Gray-scale image with intensities in [0, 255], row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  /// Throws kEmptyImage for zero size and kInvalidArgument on a pixel count
  /// mismatch or an intensity outside [0, 255].
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<double>& pixels() const noexcept { return pixels_; }
  std::vector<double>& pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
};

/// Luma 0.299 R + 0.587 G + 0.114 B for RGB input; gray input is copied.
GrayImage grayscale(const Raster& raster);

/// Bilinear resampling with pixel-centre alignment.
GrayImage resize_bilinear(const GrayImage& image, int width, int height);

/// Quantizes to 8 bits (round half away from zero, clamp to [0, 255]).
Raster to_raster(const GrayImage& image);

Raster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& image);
std::vector<std::uint8_t> encode_png(const GrayImage& image);

/// Image size without decoding pixel data.
struct ImageSize {
  int width = 0;
  int height = 0;
};
ImageSize read_png_size(const std::filesystem::path& path);

}  // namespace eigenspine
