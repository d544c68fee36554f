#pragma once

#include <algorithm>
#include <optional>

namespace ocs {

// Axis-aligned pixel box; x_max/y_max are exclusive, so a single pixel at
// (3,4) is {3,4,4,5}.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return valid() ? width() * height() : 0.0; }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  bool operator==(const BBox&) const = default;
};

// Clips to [0,width]x[0,height]; nullopt when nothing remains.
inline std::optional<BBox> clip_to_frame(const BBox& b, double width, double height) {
  BBox c{std::clamp(b.x_min, 0.0, width), std::clamp(b.y_min, 0.0, height),
         std::clamp(b.x_max, 0.0, width), std::clamp(b.y_max, 0.0, height)};
  if (!c.valid()) return std::nullopt;
  return c;
}

}  // namespace ocs
