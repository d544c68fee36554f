#include "ocsynth/image.hpp"

#include <algorithm>
#include <numeric>

namespace ocs {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kDegenerateScale: return "DegenerateScale";
    case ErrorCode::kInvalidThresholds: return "InvalidThresholds";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kEmptyRing: return "EmptyRing";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::kMissingAsset: return "MissingAsset";
    case ErrorCode::kDecodeFailure: return "DecodeFailure";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kServiceRejection: return "ServiceRejection";
    case ErrorCode::kServiceUnavailable: return "ServiceUnavailable";
    case ErrorCode::kAllMissing: return "AllMissing";
    case ErrorCode::kUnorganized: return "Unorganized";
    case ErrorCode::kNoHorizontalPlane: return "NoHorizontalPlane";
    case ErrorCode::kEmptyScene: return "EmptyScene";
    case ErrorCode::kEmptyRealSubset: return "EmptyRealSubset";
    case ErrorCode::kInsufficient: return "Insufficient";
    case ErrorCode::kNoGroundTruth: return "NoGroundTruth";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1) fail(ErrorCode::kInvalidArgument, "image dimensions must be >= 1");
  if (channels != 1 && channels != 3 && channels != 4)
    fail(ErrorCode::kInvalidArgument, "image must have 1, 3 or 4 channels");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : Image(width, height, channels) {
  if (data.size() != data_.size()) fail(ErrorCode::kDimensionMismatch, "pixel buffer size mismatch");
  data_ = std::move(data);
}

Mask::Mask(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) fail(ErrorCode::kInvalidArgument, "mask dimensions must be >= 1");
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::optional<PixelRect> Mask::tight_box() const {
  PixelRect r{width_, height_, 0, 0};
  bool any = false;
  for (int y = 0; y < height_; ++y) {
    const std::uint8_t* p = row(y);
    for (int x = 0; x < width_; ++x) {
      if (!p[x]) continue;
      any = true;
      r.x0 = std::min(r.x0, x);
      r.x1 = std::max(r.x1, x + 1);
      r.y0 = std::min(r.y0, y);
      r.y1 = std::max(r.y1, y + 1);
    }
  }
  if (!any) return std::nullopt;
  return r;
}

namespace {

// Separable running max/min over a (2r+1) window; `take_max` selects dilation.
Mask morph(const Mask& m, int radius, bool take_max) {
  if (radius <= 0) return m;
  const int w = m.width(), h = m.height();
  // Outside the frame counts as 0 for dilation and 1 for erosion, so erosion
  // does not eat masks touching the border.
  const std::uint8_t outside = take_max ? 0 : 1;
  Mask tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = m.row(y);
    std::uint8_t* dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = take_max ? 0 : 1;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = x + k;
        const std::uint8_t s = (xx < 0 || xx >= w) ? outside : src[xx];
        v = take_max ? std::max(v, s) : std::min(v, s);
      }
      dst[x] = v;
    }
  }
  for (int y = 0; y < h; ++y) {
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = take_max ? 0 : 1;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = y + k;
        const std::uint8_t s = (yy < 0 || yy >= h) ? outside : tmp.at(x, yy);
        v = take_max ? std::max(v, s) : std::min(v, s);
      }
      dst[x] = v;
    }
  }
  return out;
}

void check_same(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    fail(ErrorCode::kDimensionMismatch, "mask dimensions differ");
}

}  // namespace

Mask dilate(const Mask& m, int radius) { return morph(m, radius, true); }
Mask erode(const Mask& m, int radius) { return morph(m, radius, false); }

Mask mask_union(const Mask& a, const Mask& b) {
  check_same(a, b);
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] | b.data()[i];
  return out;
}

Mask mask_subtract(const Mask& a, const Mask& b) {
  check_same(a, b);
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] & !b.data()[i];
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, img.channels() == 1 ? 0 : c);
    }
  }
  return out;
}

}  // namespace ocs
