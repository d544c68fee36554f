#pragma once

#include <array>

#include "ocsynth/image.hpp"

namespace ocs {

enum class ColorSpace { kLinearRgb, kCielab };

struct ColorStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
  ColorSpace space = ColorSpace::kCielab;
};

// sRGB (8-bit) <-> CIELAB, D65 white.
std::array<double, 3> srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<std::uint8_t, 3> lab_to_srgb(const std::array<double, 3>& lab);  // clamps to gamut
std::array<double, 3> srgb_to_linear(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Population statistics over the set pixels of `region`.
ColorStats color_stats(const Image& img, const Mask& region, ColorSpace space = ColorSpace::kCielab);

// Per-channel affine map in CIELAB: v' = scale * v + shift.
struct LabTransform {
  std::array<double, 3> scale{1.0, 1.0, 1.0};
  std::array<double, 3> shift{0.0, 0.0, 0.0};

  std::array<std::uint8_t, 3> apply(std::uint8_t r, std::uint8_t g, std::uint8_t b) const;
};

// Ring = dilate(region, ring_width) minus region.
Mask surrounding_ring(const Mask& region, int ring_width);

// Transform matching region stats to ring stats: mean always, stddev when the
// region channel has nonzero spread (otherwise mean shift only).
LabTransform estimate_harmonization(const Image& img, const Mask& region, int ring_width);

Image apply_harmonization(const Image& img, const Mask& region, const LabTransform& t);

Image harmonize_region(const Image& img, const Mask& region, int ring_width = 8);

}  // namespace ocs
