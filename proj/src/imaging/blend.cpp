#include "ocsynth/imaging/blend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ocsynth/imaging/filter.hpp"
#include "ocsynth/simd/kernels.hpp"

namespace ocs {

std::string_view to_string(BlendMode mode) {
  switch (mode) {
    case BlendMode::kDirect: return "direct";
    case BlendMode::kFeathered: return "feathered";
    case BlendMode::kGradientDomain: return "gradient_domain";
  }
  return "direct";
}

std::optional<BlendMode> parse_blend_mode(std::string_view name) {
  if (name == "direct") return BlendMode::kDirect;
  if (name == "feathered") return BlendMode::kFeathered;
  if (name == "gradient_domain") return BlendMode::kGradientDomain;
  return std::nullopt;
}

namespace {

struct Overlap {
  int x0, y0, x1, y1;  // frame coordinates, exclusive upper bounds
};

Overlap overlap_or_throw(const Image& bg, const Cutout& cutout, int x, int y) {
  const Overlap o{std::max(x, 0), std::max(y, 0), std::min(x + cutout.mask.width(), bg.width()),
                  std::min(y + cutout.mask.height(), bg.height())};
  if (o.x0 >= o.x1 || o.y0 >= o.y1) fail(ErrorCode::kNoOverlap, "paste lies fully outside the background");
  return o;
}

// Alpha-over of `alpha` (one byte per cutout pixel) across the overlap.
void alpha_over_rows(Image& bg, const Cutout& cutout, int x, int y, const Overlap& o,
                     const std::vector<std::uint8_t>& alpha) {
  const auto& k = simd::kernels();
  const int n = o.x1 - o.x0;
  std::vector<std::uint8_t> fg(static_cast<std::size_t>(n) * 3), a(fg.size());
  const int cw = cutout.mask.width();
  for (int fy = o.y0; fy < o.y1; ++fy) {
    const int cy = fy - y;
    for (int i = 0; i < n; ++i) {
      const int cx = o.x0 + i - x;
      const std::uint8_t av = alpha[static_cast<std::size_t>(cy) * cw + cx];
      for (int c = 0; c < 3; ++c) {
        fg[i * 3 + c] = cutout.image.at(cx, cy, c);
        a[i * 3 + c] = av;
      }
    }
    k.alpha_over(fg.data(), a.data(), bg.row(fy) + o.x0 * 3, n * 3);
  }
}

}  // namespace

std::vector<float> feather_alpha(const Mask& mask, double sigma, int band) {
  const int w = mask.width(), h = mask.height();
  const int pad = band + static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  Mask padded(w + 2 * pad, h + 2 * pad);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) padded.at(x + pad, y + pad) = mask.at(x, y);
  }
  // Padding makes the canvas edge count as outside for the erosion too.
  const Mask core = erode(padded, band);
  const Plane blurred = gaussian_blur(mask_to_plane(padded), sigma);
  std::vector<float> alpha(static_cast<std::size_t>(w) * h, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      alpha[static_cast<std::size_t>(y) * w + x] =
          core.at(x + pad, y + pad) ? 1.0f : std::min(1.0f, blurred.at(x + pad, y + pad));
    }
  }
  return alpha;
}

PoissonGrid build_poisson_grid(const Image& bg, const Cutout& cutout, int x, int y, int channel) {
  const Overlap o = overlap_or_throw(bg, cutout, x, y);
  auto in_mask = [&](int fx, int fy) {
    if (fx < 0 || fy < 0 || fx >= bg.width() || fy >= bg.height()) return false;
    const int cx = fx - x, cy = fy - y;
    return cutout.mask.contains(cx, cy) && cutout.mask.at(cx, cy) != 0;
  };
  int rx0 = o.x1, ry0 = o.y1, rx1 = o.x0, ry1 = o.y0;
  for (int fy = o.y0; fy < o.y1; ++fy) {
    for (int fx = o.x0; fx < o.x1; ++fx) {
      if (!in_mask(fx, fy)) continue;
      rx0 = std::min(rx0, fx);
      ry0 = std::min(ry0, fy);
      rx1 = std::max(rx1, fx + 1);
      ry1 = std::max(ry1, fy + 1);
    }
  }
  PoissonGrid g;
  if (rx0 >= rx1) {
    // Only transparent pixels overlap the frame: nothing to solve.
    g.width = g.height = 0;
    return g;
  }
  g.origin_x = rx0 - 1;
  g.origin_y = ry0 - 1;
  g.width = rx1 - rx0 + 2;
  g.height = ry1 - ry0 + 2;
  const std::size_t cells = static_cast<std::size_t>(g.width) * g.height;
  g.u.assign(cells, 0.0f);
  g.guidance.assign(cells, 0.0f);
  g.interior.assign(cells, 0.0f);
  std::vector<float> src(cells, 0.0f);
  for (int gy = 0; gy < g.height; ++gy) {
    for (int gx = 0; gx < g.width; ++gx) {
      const int fx = g.origin_x + gx, fy = g.origin_y + gy;
      const std::size_t i = g.index(gx, gy);
      g.u[i] = bg.at(std::clamp(fx, 0, bg.width() - 1), std::clamp(fy, 0, bg.height() - 1), channel);
      if (in_mask(fx, fy)) {
        g.interior[i] = 1.0f;
        src[i] = cutout.image.at(fx - x, fy - y, channel);
      }
    }
  }
  const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
  double offset_sum = 0.0;
  std::size_t offset_n = 0;
  for (int gy = 1; gy + 1 < g.height; ++gy) {
    for (int gx = 1; gx + 1 < g.width; ++gx) {
      const std::size_t i = g.index(gx, gy);
      if (g.interior[i] == 0.0f) continue;
      float div = 0.0f;
      for (int k = 0; k < 4; ++k) {
        const std::size_t j = g.index(gx + dx[k], gy + dy[k]);
        if (g.interior[j] != 0.0f) {
          div += src[i] - src[j];
        } else {
          offset_sum += g.u[j] - src[i];
          ++offset_n;
        }
      }
      g.guidance[i] = div;
    }
  }
  const float offset = offset_n ? static_cast<float>(offset_sum / offset_n) : 0.0f;
  for (std::size_t i = 0; i < cells; ++i) {
    if (g.interior[i] != 0.0f) g.u[i] = src[i] + offset;
  }
  return g;
}

double poisson_residual(const PoissonGrid& g) {
  if (g.width < 3 || g.height < 3) return 0.0;
  const auto& k = simd::kernels();
  float worst = 0.0f;
  const int n = g.width - 2;
  for (int y = 1; y + 1 < g.height; ++y) {
    const float* row = g.u.data() + g.index(1, y);
    worst = std::max(worst, k.poisson_residual(row - g.width, row, row + g.width, g.guidance.data() + g.index(1, y),
                                               g.interior.data() + g.index(1, y), n));
  }
  return worst;
}

double default_relaxation(const PoissonGrid& g) {
  const double n = std::max(g.width, g.height);
  return 2.0 / (1.0 + std::sin(std::numbers::pi / n));
}

PoissonStats solve_poisson(PoissonGrid& g, double tolerance, int max_iterations, std::span<const int> order,
                           double relaxation) {
  PoissonStats stats;
  if (g.width < 3 || g.height < 3) return stats;
  std::vector<int> default_order;
  if (order.empty()) {
    for (int y = 1; y + 1 < g.height; ++y) {
      for (int x = 1; x + 1 < g.width; ++x) {
        const std::size_t i = g.index(x, y);
        if (g.interior[i] != 0.0f) default_order.push_back(static_cast<int>(i));
      }
    }
    order = default_order;
  }
  const int W = g.width;
  float* u = g.u.data();
  const float* div = g.guidance.data();
  const float w = static_cast<float>(relaxation > 0.0 ? relaxation : default_relaxation(g));
  stats.residual = poisson_residual(g);
  while (stats.residual > tolerance && stats.iterations < max_iterations) {
    for (const int i : order) {
      const float gs = (u[i - W] + u[i + W] + u[i - 1] + u[i + 1] + div[i]) * 0.25f;
      u[i] = u[i] + w * (gs - u[i]);
    }
    ++stats.iterations;
    stats.residual = poisson_residual(g);
  }
  return stats;
}

void blend_paste_into(Image& bg, const Cutout& cutout, int x, int y, BlendMode mode, const BlendParams& params,
                      PoissonStats* stats) {
  if (bg.channels() != 3) fail(ErrorCode::kInvalidArgument, "background must be RGB");
  const Overlap o = overlap_or_throw(bg, cutout, x, y);
  switch (mode) {
    case BlendMode::kDirect: {
      std::vector<std::uint8_t> alpha(cutout.mask.data().size());
      for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = cutout.mask.data()[i] ? 255 : 0;
      alpha_over_rows(bg, cutout, x, y, o, alpha);
      return;
    }
    case BlendMode::kFeathered: {
      const auto af = feather_alpha(cutout.mask, params.feather_sigma, params.feather_band);
      std::vector<std::uint8_t> alpha(af.size());
      for (std::size_t i = 0; i < af.size(); ++i) alpha[i] = static_cast<std::uint8_t>(std::lround(af[i] * 255.0f));
      alpha_over_rows(bg, cutout, x, y, o, alpha);
      return;
    }
    case BlendMode::kGradientDomain: {
      PoissonStats worst;
      std::vector<PoissonGrid> grids;
      for (int c = 0; c < 3; ++c) {
        PoissonGrid g = build_poisson_grid(bg, cutout, x, y, c);
        const PoissonStats s = solve_poisson(g, params.poisson_tolerance, params.poisson_max_iterations, {},
                                               params.poisson_relaxation);
        worst.iterations = std::max(worst.iterations, s.iterations);
        worst.residual = std::max(worst.residual, s.residual);
        grids.push_back(std::move(g));
      }
      // Channels are solved against the untouched background, then written.
      for (int c = 0; c < 3; ++c) {
        const PoissonGrid& g = grids[c];
        for (int gy = 1; gy + 1 < g.height; ++gy) {
          for (int gx = 1; gx + 1 < g.width; ++gx) {
            const std::size_t i = g.index(gx, gy);
            if (g.interior[i] == 0.0f) continue;
            bg.at(g.origin_x + gx, g.origin_y + gy, c) =
                static_cast<std::uint8_t>(std::lround(std::clamp(g.u[i], 0.0f, 255.0f)));
          }
        }
      }
      if (stats) *stats = worst;
      return;
    }
  }
}

Image blend_paste(const Image& background, const Cutout& cutout, int x, int y, BlendMode mode,
                  const BlendParams& params, PoissonStats* stats) {
  Image out = background;
  blend_paste_into(out, cutout, x, y, mode, params, stats);
  return out;
}

}  // namespace ocs
