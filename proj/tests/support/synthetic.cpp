#include "support/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "ocsynth/imaging/cutout.hpp"

namespace synth {

ocs::Image smooth_background(int width, int height, std::uint64_t seed) {
  ocs::Rng rng(seed);
  ocs::Image img(width, height, 3);
  double fx[3], fy[3], ph[3], base[3], amp[3];
  for (int c = 0; c < 3; ++c) {
    fx[c] = rng.uniform(0.5, 3.0) * 2.0 * M_PI / width;
    fy[c] = rng.uniform(0.5, 3.0) * 2.0 * M_PI / height;
    ph[c] = rng.uniform(0.0, 2.0 * M_PI);
    base[c] = rng.uniform(60.0, 190.0);
    amp[c] = rng.uniform(10.0, 50.0);
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = base[c] + amp[c] * std::sin(fx[c] * x + ph[c]) * std::cos(fy[c] * y) +
                         rng.uniform(-4.0, 4.0);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

ocs::Image constant_image(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ocs::Image img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

ocs::Mask rect_mask(int width, int height, int x0, int y0, int x1, int y1) {
  ocs::Mask m(width, height);
  for (int y = std::max(0, y0); y < std::min(height, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) m.at(x, y) = 1;
  }
  return m;
}

ocs::Mask blob_mask(int width, int height, ocs::Rng& rng) {
  ocs::Mask m(width, height);
  const int n = static_cast<int>(rng.uniform_int(1, 3));
  for (int k = 0; k < n; ++k) {
    const double cx = rng.uniform(0.3, 0.7) * width, cy = rng.uniform(0.3, 0.7) * height;
    const double rx = rng.uniform(0.2, 0.5) * width, ry = rng.uniform(0.2, 0.5) * height;
    const double th = rng.uniform(0.0, M_PI);
    const double c = std::cos(th), s = std::sin(th);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const double u = (c * dx + s * dy) / rx, v = (-s * dx + c * dy) / ry;
        if (u * u + v * v <= 1.0) m.at(x, y) = 1;
      }
    }
  }
  if (m.none()) m.at(width / 2, height / 2) = 1;
  return m;
}

ocs::Cutout random_cutout(ocs::Rng& rng, int max_side, int class_label, const std::string& id) {
  const int w = static_cast<int>(rng.uniform_int(max_side / 2, max_side));
  const int h = static_cast<int>(rng.uniform_int(max_side / 2, max_side));
  ocs::Image img = smooth_background(w, h, rng.next());
  const ocs::Mask mask = blob_mask(w, h, rng);
  return ocs::extract_cutout(img, mask, class_label, id);
}

ocs::Image canny_test_image(int index, int width, int height) {
  ocs::Rng rng(1000 + index);
  ocs::Image img = smooth_background(width, height, 77 + index);
  const int shapes = 2 + index % 4;
  for (int s = 0; s < shapes; ++s) {
    const std::uint8_t col[3] = {static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                 static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                 static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
    const bool ellipse = rng.bernoulli(0.5);
    const double cx = rng.uniform(0.2, 0.8) * width, cy = rng.uniform(0.2, 0.8) * height;
    const double rx = rng.uniform(0.08, 0.25) * width, ry = rng.uniform(0.08, 0.25) * height;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0 : std::fabs(dx) <= 1.0 && std::fabs(dy) <= 1.0;
        if (inside) {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
        }
      }
    }
  }
  return img;
}

}  // namespace synth

namespace synth {

ocs::AssetStore asset_store(std::uint64_t seed, int targets, int distractors, int backgrounds, int bg_width,
                            int bg_height, int classes, int max_side) {
  ocs::Rng rng(seed);
  ocs::AssetStore a;
  for (int i = 0; i < targets; ++i)
    a.targets.push_back(random_cutout(rng, max_side, i % classes, "t" + std::to_string(i)));
  for (int i = 0; i < distractors; ++i)
    a.distractors.push_back(random_cutout(rng, max_side, -1, "d" + std::to_string(i)));
  for (int i = 0; i < backgrounds; ++i) {
    a.backgrounds.push_back(smooth_background(bg_width, bg_height, seed * 131 + i));
    a.background_names.push_back("bg" + std::to_string(i) + ".png");
  }
  return a;
}

}  // namespace synth
