#include "ocsynth/imaging/filter.hpp"

#include <algorithm>
#include <cmath>

#include "ocsynth/simd/kernels.hpp"

namespace ocs {

Plane to_gray(const Image& img) {
  Plane p{img.width(), img.height(), std::vector<float>(static_cast<std::size_t>(img.width()) * img.height())};
  const int ch = img.channels();
  for (int y = 0; y < img.height(); ++y) {
    const std::uint8_t* r = img.row(y);
    for (int x = 0; x < img.width(); ++x) {
      if (ch == 1) {
        p.at(x, y) = r[x];
      } else {
        p.at(x, y) = 0.299f * r[x * ch] + 0.587f * r[x * ch + 1] + 0.114f * r[x * ch + 2];
      }
    }
  }
  return p;
}

Plane mask_to_plane(const Mask& mask) {
  Plane p{mask.width(), mask.height(), std::vector<float>(mask.data().size())};
  for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = mask.data()[i] ? 1.0f : 0.0f;
  return p;
}

std::vector<float> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) fail(ErrorCode::kInvalidArgument, "sigma must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(2 * r + 1);
  double sum = 0.0;
  for (int k = -r; k <= r; ++k) sum += w[k + r] = std::exp(-(k * k) / (2.0 * sigma * sigma));
  std::vector<float> taps(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) taps[i] = static_cast<float>(w[i] / sum);
  return taps;
}

Plane gaussian_blur(const Plane& src, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int ntaps = static_cast<int>(taps.size()), r = ntaps / 2;
  const int w = src.width, h = src.height;
  const auto& k = simd::kernels();

  Plane tmp{w, h, std::vector<float>(src.data.size())};
  std::vector<float> padded(w + 2 * r);
  for (int y = 0; y < h; ++y) {
    const float* row = src.data.data() + static_cast<std::size_t>(y) * w;
    for (int i = 0; i < w + 2 * r; ++i) padded[i] = row[std::clamp(i - r, 0, w - 1)];
    k.convolve_row(padded.data(), taps.data(), ntaps, tmp.data.data() + static_cast<std::size_t>(y) * w, w);
  }
  Plane out{w, h, std::vector<float>(src.data.size())};
  std::vector<const float*> rows(ntaps);
  for (int y = 0; y < h; ++y) {
    for (int j = 0; j < ntaps; ++j) {
      rows[j] = tmp.data.data() + static_cast<std::size_t>(std::clamp(y + j - r, 0, h - 1)) * w;
    }
    k.convolve_cols(rows.data(), taps.data(), ntaps, out.data.data() + static_cast<std::size_t>(y) * w, w);
  }
  return out;
}

Mask canny_edges(const Image& image, const CannyParams& params) {
  if (!(params.low < params.high)) fail(ErrorCode::kInvalidThresholds, "low threshold must be below high");
  if (!(params.sigma > 0.0)) fail(ErrorCode::kInvalidArgument, "sigma must be positive");
  const int w = image.width(), h = image.height();
  const Plane smooth = gaussian_blur(to_gray(image), params.sigma);

  // Sobel with replicated borders.
  const auto& k = simd::kernels();
  std::vector<float> gx(static_cast<std::size_t>(w) * h), gy(gx.size()), mag(gx.size());
  std::vector<float> pa(w + 2), pm(w + 2), pb(w + 2);
  auto pad_row = [&](int y, std::vector<float>& dst) {
    const float* row = smooth.data.data() + static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w;
    for (int i = 0; i < w + 2; ++i) dst[i] = row[std::clamp(i - 1, 0, w - 1)];
  };
  for (int y = 0; y < h; ++y) {
    pad_row(y - 1, pa);
    pad_row(y, pm);
    pad_row(y + 1, pb);
    const std::size_t off = static_cast<std::size_t>(y) * w;
    k.sobel_row(pa.data(), pm.data(), pb.data(), gx.data() + off, gy.data() + off, mag.data() + off, w);
  }

  // Non-maximum suppression. 0 = suppressed, 1 = weak, 2 = strong. The
  // one-pixel frame border never carries edges.
  std::vector<std::uint8_t> cls(gx.size(), 0);
  const float tan22 = static_cast<float>(std::tan(22.5 * M_PI / 180.0));
  const float tan67 = static_cast<float>(std::tan(67.5 * M_PI / 180.0));
  auto M = [&](int x, int y) { return mag[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const float m = mag[i];
      if (!(m > params.low)) continue;
      const float ax = std::fabs(gx[i]), ay = std::fabs(gy[i]);
      bool keep;
      if (ay < tan22 * ax) {
        keep = m > M(x - 1, y) && m >= M(x + 1, y);
      } else if (ay > tan67 * ax) {
        keep = m > M(x, y - 1) && m >= M(x, y + 1);
      } else if ((gx[i] > 0) == (gy[i] > 0)) {
        keep = m > M(x - 1, y - 1) && m > M(x + 1, y + 1);
      } else {
        keep = m > M(x + 1, y - 1) && m > M(x - 1, y + 1);
      }
      if (keep) cls[i] = m > params.high ? 2 : 1;
    }
  }

  // Hysteresis from every strong pixel.
  Mask edges(w, h);
  std::vector<int> stack;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (cls[i] != 2 || edges.data()[i]) continue;
    edges.data()[i] = 1;
    stack.push_back(static_cast<int>(i));
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int px = p % w, py = p / w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (cls[j] && !edges.data()[j]) {
            edges.data()[j] = 1;
            stack.push_back(static_cast<int>(j));
          }
        }
      }
    }
  }
  return edges;
}

}  // namespace ocs
