#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocsynth/error.hpp"

namespace ocs {

// Row-major interleaved 8-bit raster with 1, 3 or 4 channels.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0);
  Image(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_ * channels_; }
  const std::uint8_t* row(int y) const {
    return data_.data() + static_cast<std::size_t>(y) * width_ * channels_;
  }
  std::uint8_t& at(int x, int y, int c) { return row(y)[x * channels_ + c]; }
  std::uint8_t at(int x, int y, int c) const { return row(y)[x * channels_ + c]; }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// Inclusive-exclusive pixel rectangle.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const PixelRect&) const = default;
};

// Binary raster, values in {0,1}.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
  const std::uint8_t* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }
  std::uint8_t& at(int x, int y) { return row(y)[x]; }
  std::uint8_t at(int x, int y) const { return row(y)[x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  std::size_t count() const;
  bool none() const { return count() == 0; }
  std::optional<PixelRect> tight_box() const;

  bool operator==(const Mask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// A masked RGBA object instance cropped tight to its mask.
struct Cutout {
  Image image;  // RGBA, alpha = 255 * mask
  Mask mask;
  int class_label = 0;
  std::string instance_id;
};

// 16-bit depth in millimetres; 0 marks a missing sample.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> mm;

  std::uint16_t at(int x, int y) const { return mm[static_cast<std::size_t>(y) * width + x]; }
};

// Square (Chebyshev) morphology; radius 0 returns the input.
Mask dilate(const Mask& m, int radius);
Mask erode(const Mask& m, int radius);
Mask mask_union(const Mask& a, const Mask& b);
Mask mask_subtract(const Mask& a, const Mask& b);

Image to_rgb(const Image& img);

}  // namespace ocs
