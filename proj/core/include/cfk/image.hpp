#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cfk {

/// 8-bit grayscale raster, row-major. Pixel (x, y) has its center at the
/// real coordinate (x, y); landmarks use the same convention.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  bool empty() const noexcept { return width <= 0 || height <= 0; }
  std::size_t size() const noexcept { return pixels.size(); }

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  /// Replicate-border access.
  std::uint8_t clamped(int x, int y) const;

  bool operator==(const GrayImage&) const = default;
};

/// Bilinear interpolation with edge clamping.
double sample_bilinear(const GrayImage& image, double x, double y);

/// Reads PNG or baseline JPEG (detected from the file signature); color
/// inputs are converted to luma.
GrayImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const GrayImage& image);
void write_png(const GrayImage& image, const std::filesystem::path& path);
GrayImage decode_png(std::span<const std::uint8_t> bytes);

}  // namespace cfk
