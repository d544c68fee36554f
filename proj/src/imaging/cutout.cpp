#include "ocsynth/imaging/cutout.hpp"

#include <algorithm>
#include <cmath>

namespace ocs {
namespace {

// cos/sin with exact values at multiples of 90 degrees so axis-aligned
// rotations resample without half-pixel drift.
std::pair<double, double> snapped_cos_sin(double deg) {
  const double rad = deg * M_PI / 180.0;
  double c = std::cos(rad), s = std::sin(rad);
  auto snap = [](double v) {
    for (double t : {-1.0, 0.0, 1.0}) {
      if (std::fabs(v - t) < 1e-12) return t;
    }
    return v;
  };
  return {snap(c), snap(s)};
}

double bilinear(const Image& img, double fx, double fy, int c) {
  // fx, fy in pixel-centre coordinates
  const double x = std::clamp(fx, 0.0, img.width() - 1.0);
  const double y = std::clamp(fy, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = x - x0, ay = y - y0;
  const double top = img.at(x0, y0, c) * (1.0 - ax) + img.at(x1, y0, c) * ax;
  const double bot = img.at(x0, y1, c) * (1.0 - ax) + img.at(x1, y1, c) * ax;
  return top * (1.0 - ay) + bot * ay;
}

// Bilinear over masked samples only, so colour outside the object never bleeds
// into its boundary.
double masked_bilinear(const Image& img, const Mask& mask, double fx, double fy, int c) {
  const double x = std::clamp(fx, 0.0, img.width() - 1.0);
  const double y = std::clamp(fy, 0.0, img.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double ax = x - x0, ay = y - y0;
  const int xs[2] = {x0, x1}, ys[2] = {y0, y1};
  const double wx[2] = {1.0 - ax, ax}, wy[2] = {1.0 - ay, ay};
  double acc = 0.0, wsum = 0.0;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      if (!mask.at(xs[i], ys[j])) continue;
      const double wt = wx[i] * wy[j];
      acc += wt * img.at(xs[i], ys[j], c);
      wsum += wt;
    }
  }
  if (wsum <= 0.0) return bilinear(img, fx, fy, c);
  return acc / wsum;
}

}  // namespace

Cutout extract_cutout(const Image& image, const Mask& mask, int class_label, std::string instance_id) {
  if (image.width() != mask.width() || image.height() != mask.height())
    fail(ErrorCode::kDimensionMismatch, "mask and image dimensions differ");
  const auto box = mask.tight_box();
  if (!box) fail(ErrorCode::kEmptyMask, "mask has no set pixels");
  Cutout out;
  out.class_label = class_label;
  out.instance_id = std::move(instance_id);
  out.image = Image(box->width(), box->height(), 4);
  out.mask = Mask(box->width(), box->height());
  const int ch = image.channels();
  for (int y = 0; y < box->height(); ++y) {
    for (int x = 0; x < box->width(); ++x) {
      const int sx = x + box->x0, sy = y + box->y0;
      for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = image.at(sx, sy, ch == 1 ? 0 : c);
      const std::uint8_t m = mask.at(sx, sy);
      out.mask.at(x, y) = m;
      out.image.at(x, y, 3) = m ? 255 : 0;
    }
  }
  return out;
}

Cutout cutout_from_rgba(const Image& rgba, int class_label, std::string instance_id) {
  if (rgba.channels() != 4) fail(ErrorCode::kInvalidArgument, "cutout image needs an alpha channel");
  Mask mask(rgba.width(), rgba.height());
  for (int y = 0; y < rgba.height(); ++y) {
    for (int x = 0; x < rgba.width(); ++x) mask.at(x, y) = rgba.at(x, y, 3) ? 1 : 0;
  }
  return extract_cutout(rgba, mask, class_label, std::move(instance_id));
}

Cutout transform_cutout(const Cutout& cutout, double rotation_deg, double scale) {
  if (!(scale > 0.0)) fail(ErrorCode::kDegenerateScale, "scale must be positive");
  const int w = cutout.mask.width(), h = cutout.mask.height();
  const auto [c, s] = snapped_cos_sin(rotation_deg);
  const double sw = w * scale, sh = h * scale;
  if (sw < 1.0 || sh < 1.0) fail(ErrorCode::kDegenerateScale, "scaled bounding box collapses below 1x1");
  const double ow_f = std::fabs(sw * c) + std::fabs(sh * s);
  const double oh_f = std::fabs(sw * s) + std::fabs(sh * c);
  const int ow = static_cast<int>(std::ceil(ow_f - 1e-6));
  const int oh = static_cast<int>(std::ceil(oh_f - 1e-6));
  if (ow < 1 || oh < 1) fail(ErrorCode::kDegenerateScale, "scaled bounding box collapses below 1x1");

  const double icx = w / 2.0, icy = h / 2.0, ocx = ow / 2.0, ocy = oh / 2.0;
  Mask mask(ow, oh);
  Image rgb(ow, oh, 4);
  // Image y points down, so a visually counter-clockwise rotation by t maps
  // input offset (dx, dy) to (c*dx + s*dy, -s*dx + c*dy); invert that here.
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double dx = x + 0.5 - ocx, dy = y + 0.5 - ocy;
      const double ix = (c * dx - s * dy) / scale + icx;
      const double iy = (s * dx + c * dy) / scale + icy;
      const int nx = static_cast<int>(std::floor(ix)), ny = static_cast<int>(std::floor(iy));
      if (!cutout.mask.contains(nx, ny) || !cutout.mask.at(nx, ny)) continue;
      mask.at(x, y) = 1;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = masked_bilinear(cutout.image, cutout.mask, ix - 0.5, iy - 0.5, ch);
        rgb.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
      rgb.at(x, y, 3) = 255;
    }
  }
  if (mask.none()) fail(ErrorCode::kDegenerateScale, "transformed mask is empty");
  return extract_cutout(rgb, mask, cutout.class_label, cutout.instance_id);
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (img.width() == width && img.height() == height) return img;
  Image out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(bilinear(img, fx, fy, c), 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace ocs
