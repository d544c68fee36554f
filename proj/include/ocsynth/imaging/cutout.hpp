#pragma once

#include "ocsynth/image.hpp"

namespace ocs {

// Crops `image` to the tight box of `mask`; alpha = 255 * mask.
Cutout extract_cutout(const Image& image, const Mask& mask, int class_label = 0,
                      std::string instance_id = {});

// Cutout from an RGBA image whose nonzero alpha marks the object.
Cutout cutout_from_rgba(const Image& rgba, int class_label = 0, std::string instance_id = {});

// Rotates (degrees, counter-clockwise as displayed) and scales about the
// centre. Mask resampled nearest-neighbour, colour bilinear; output re-cropped
// tight with alpha rebuilt from the mask.
Cutout transform_cutout(const Cutout& cutout, double rotation_deg, double scale);

// Bilinear resize, sample centres aligned (x + 0.5) * src / dst - 0.5.
Image resize_bilinear(const Image& img, int width, int height);

}  // namespace ocs
