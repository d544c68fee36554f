#pragma once

#include <span>

#include "ocsynth/image.hpp"

namespace ocs {

// |pixels covered by >= 2 masks| / sum of mask areas. Throws EmptyInput when
// the list is empty or every mask is empty.
double occlusion_fraction(std::span<const Mask> masks);

// Rasterises a pixel box into a frame-sized mask (clipped).
Mask box_mask(int width, int height, double x_min, double y_min, double x_max, double y_max);

}  // namespace ocs
