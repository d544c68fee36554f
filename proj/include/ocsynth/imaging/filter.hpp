#pragma once

#include <span>
#include <vector>

#include "ocsynth/image.hpp"

namespace ocs {

// Single-channel float plane, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

Plane to_gray(const Image& img);            // 0.299 R + 0.587 G + 0.114 B
Plane mask_to_plane(const Mask& mask);      // 0.0 / 1.0

// Normalised Gaussian taps, radius ceil(3 sigma).
std::vector<float> gaussian_taps(double sigma);
// Separable Gaussian with replicated borders.
Plane gaussian_blur(const Plane& src, double sigma);

struct CannyParams {
  double sigma = 1.4;
  double low = 100.0;
  double high = 200.0;
};

// Grayscale -> Gaussian -> Sobel -> 4-direction non-maximum suppression ->
// hysteresis (weak pixels kept iff 8-connected to a strong one). Thresholds
// apply to the L2 Sobel magnitude of 0-255 intensities.
Mask canny_edges(const Image& image, const CannyParams& params = {});

}  // namespace ocs
