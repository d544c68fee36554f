#include "ocsynth/imaging/harmonize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ocs {
namespace {

constexpr double kXn = 0.95047, kYn = 1.0, kZn = 1.08883;

double decode_srgb(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }
double encode_srgb(double v) { return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055; }

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}
double lab_finv(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d ? t * t * t : 3.0 * d * d * (t - 4.0 / 29.0);
}

void check_region(const Image& img, const Mask& region) {
  if (img.width() != region.width() || img.height() != region.height())
    fail(ErrorCode::kDimensionMismatch, "region mask does not match image");
}

}  // namespace

std::array<double, 3> srgb_to_linear(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return {decode_srgb(r / 255.0), decode_srgb(g / 255.0), decode_srgb(b / 255.0)};
}

std::array<double, 3> srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto [lr, lg, lb] = srgb_to_linear(r, g, b);
  const double X = 0.4124564 * lr + 0.3575761 * lg + 0.1804375 * lb;
  const double Y = 0.2126729 * lr + 0.7151522 * lg + 0.0721750 * lb;
  const double Z = 0.0193339 * lr + 0.1191920 * lg + 0.9503041 * lb;
  const double fx = lab_f(X / kXn), fy = lab_f(Y / kYn), fz = lab_f(Z / kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<std::uint8_t, 3> lab_to_srgb(const std::array<double, 3>& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0;
  const double fz = fy - lab[2] / 200.0;
  const double X = kXn * lab_finv(fx), Y = kYn * lab_finv(fy), Z = kZn * lab_finv(fz);
  const double lin[3] = {3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z,
                         -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z,
                         0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z};
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double v = encode_srgb(std::clamp(lin[c], 0.0, 1.0));
    out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v * 255.0, 0.0, 255.0)));
  }
  return out;
}

ColorStats color_stats(const Image& img, const Mask& region, ColorSpace space) {
  check_region(img, region);
  ColorStats st;
  st.space = space;
  std::vector<std::array<double, 3>> values;
  const int ch = img.channels();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!region.at(x, y)) continue;
      const std::uint8_t* p = img.row(y) + x * ch;
      values.push_back(space == ColorSpace::kCielab ? srgb_to_lab(p[0], p[1], p[2]) : srgb_to_linear(p[0], p[1], p[2]));
    }
  }
  if (values.empty()) return st;
  // Two passes so constant regions come out with exactly zero spread.
  const double n = static_cast<double>(values.size());
  for (const auto& v : values)
    for (int c = 0; c < 3; ++c) st.mean[c] += v[c];
  for (int c = 0; c < 3; ++c) st.mean[c] /= n;
  for (const auto& v : values)
    for (int c = 0; c < 3; ++c) st.stddev[c] += (v[c] - st.mean[c]) * (v[c] - st.mean[c]);
  for (int c = 0; c < 3; ++c) st.stddev[c] = std::sqrt(st.stddev[c] / n);
  return st;
}

std::array<std::uint8_t, 3> LabTransform::apply(std::uint8_t r, std::uint8_t g, std::uint8_t b) const {
  auto lab = srgb_to_lab(r, g, b);
  for (int c = 0; c < 3; ++c) lab[c] = scale[c] * lab[c] + shift[c];
  return lab_to_srgb(lab);
}

Mask surrounding_ring(const Mask& region, int ring_width) {
  return mask_subtract(dilate(region, ring_width), region);
}

LabTransform estimate_harmonization(const Image& img, const Mask& region, int ring_width) {
  check_region(img, region);
  if (region.none()) fail(ErrorCode::kEmptyInput, "harmonization region is empty");
  const Mask ring = surrounding_ring(region, ring_width);
  if (ring.none()) fail(ErrorCode::kEmptyRing, "no pixels surround the region");
  const ColorStats rs = color_stats(img, region), ts = color_stats(img, ring);
  LabTransform t;
  for (int c = 0; c < 3; ++c) {
    t.scale[c] = rs.stddev[c] > 1e-9 ? ts.stddev[c] / rs.stddev[c] : 1.0;
    t.shift[c] = ts.mean[c] - t.scale[c] * rs.mean[c];
  }
  return t;
}

Image apply_harmonization(const Image& img, const Mask& region, const LabTransform& t) {
  check_region(img, region);
  Image out = img;
  const int ch = img.channels();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!region.at(x, y)) continue;
      std::uint8_t* p = out.row(y) + x * ch;
      const auto rgb = t.apply(p[0], p[1], p[2]);
      std::copy(rgb.begin(), rgb.end(), p);
    }
  }
  return out;
}

Image harmonize_region(const Image& img, const Mask& region, int ring_width) {
  return apply_harmonization(img, region, estimate_harmonization(img, region, ring_width));
}

}  // namespace ocs
