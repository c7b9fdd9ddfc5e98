#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace inbet {

// Grayscale line drawing: 1 = white background, 0 = black line.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<double> intensities;  // row-major, width * height

  RasterImage() = default;
  RasterImage(int w, int h, double fill = 1.0);

  double at(int x, int y) const { return intensities[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return intensities[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  // Throws inbet::Error when the grid length or value range is wrong.
  void validate() const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

// Boolean per-pixel mask (true = line pixel).
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h, bool fill = false);

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  bool get_or(int x, int y, bool fallback) const {
    return (x < 0 || y < 0 || x >= width || y >= height) ? fallback : at(x, y);
  }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;
};

// 8-bit grayscale; 255 = white. Format chosen by extension (.png or .pgm).
RasterImage load_image(const std::filesystem::path& path);
void save_image(const RasterImage& image, const std::filesystem::path& path);

RasterImage load_png(const std::filesystem::path& path);
void save_png(const RasterImage& image, const std::filesystem::path& path);
RasterImage load_pgm(const std::filesystem::path& path);
void save_pgm(const RasterImage& image, const std::filesystem::path& path);

// One 3x3 morphological dilation (pixels outside the grid count as false).
Mask dilate3x3(const Mask& mask);

// Number of 8-connected components of true pixels.
int count_components8(const Mask& mask);

}  // namespace inbet
