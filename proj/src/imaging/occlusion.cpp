#include "ocsynth/imaging/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ocsynth/simd/kernels.hpp"

namespace ocs {

double occlusion_fraction(std::span<const Mask> masks) {
  if (masks.empty()) fail(ErrorCode::kEmptyInput, "no masks");
  const int w = masks.front().width(), h = masks.front().height();
  const auto& k = simd::kernels();
  std::vector<std::uint8_t> cover(static_cast<std::size_t>(w) * h, 0);
  std::size_t total = 0;
  for (const Mask& m : masks) {
    if (m.width() != w || m.height() != h) fail(ErrorCode::kDimensionMismatch, "masks do not share a frame");
    k.accumulate(m.data().data(), cover.data(), static_cast<int>(cover.size()));
    total += m.count();
  }
  if (total == 0) fail(ErrorCode::kEmptyInput, "all masks are empty");
  const std::size_t multi = k.count_at_least(cover.data(), static_cast<int>(cover.size()), 2);
  return static_cast<double>(multi) / static_cast<double>(total);
}

Mask box_mask(int width, int height, double x_min, double y_min, double x_max, double y_max) {
  Mask m(width, height);
  // A pixel belongs to the box when its centre lies inside.
  const int x0 = std::max(0, static_cast<int>(std::ceil(x_min - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(y_min - 0.5)));
  const int x1 = std::min(width, static_cast<int>(std::ceil(x_max - 0.5)));
  const int y1 = std::min(height, static_cast<int>(std::ceil(y_max - 0.5)));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
  }
  return m;
}

}  // namespace ocs
