#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ocsynth/image.hpp"

namespace ocs {

enum class BlendMode { kDirect, kFeathered, kGradientDomain };

std::string_view to_string(BlendMode mode);
std::optional<BlendMode> parse_blend_mode(std::string_view name);

struct BlendParams {
  double feather_sigma = 2.0;
  int feather_band = 5;
  double poisson_tolerance = 0.5;  // residual max-norm, intensity levels
  int poisson_max_iterations = 10000;
  double poisson_relaxation = 0.0;  // 1 is plain Gauss-Seidel; <= 0 picks the optimal SOR factor
};

struct PoissonStats {
  int iterations = 0;
  double residual = 0.0;
};

// Pastes `cutout` with its top-left at (x, y); parts outside the frame are
// dropped. Throws NoOverlap if nothing lands inside. `stats` receives the
// worst channel's solver stats for gradient-domain pastes.
void blend_paste_into(Image& background, const Cutout& cutout, int x, int y, BlendMode mode,
                      const BlendParams& params = {}, PoissonStats* stats = nullptr);

Image blend_paste(const Image& background, const Cutout& cutout, int x, int y, BlendMode mode,
                  const BlendParams& params = {}, PoissonStats* stats = nullptr);

// Alpha used by the feathered mode, on the cutout's own grid: 1 in the mask
// interior, Gaussian-smoothed mask inside the boundary band, 0 outside the mask.
std::vector<float> feather_alpha(const Mask& mask, double sigma, int band);

// One colour channel of the gradient-domain system on a grid padded by one
// cell. Cells with interior == 1 are unknowns; the rest hold fixed Dirichlet
// values (background, replicated past the frame edge). For interior p:
//   4 u_p - sum_{q in N4(p)} u_q = guidance_p,
//   guidance_p = sum over interior q in N4(p) of (s_p - s_q),
// with s the cutout colour. Initial interior values are s shifted by the mean
// background/source difference across the region boundary.
struct PoissonGrid {
  int width = 0;   // padded
  int height = 0;  // padded
  int origin_x = 0;  // frame coordinate of padded cell (0,0)
  int origin_y = 0;
  std::vector<float> u;
  std::vector<float> guidance;
  std::vector<float> interior;  // 0/1

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

PoissonGrid build_poisson_grid(const Image& background, const Cutout& cutout, int x, int y, int channel);

// Over-relaxed Gauss-Seidel until the residual max-norm is <= tolerance or
// max_iterations sweeps. `order` optionally permutes the interior update order
// (cell indices of `grid`); default is row-major.
PoissonStats solve_poisson(PoissonGrid& grid, double tolerance, int max_iterations,
                           std::span<const int> order = {}, double relaxation = 0.0);

double default_relaxation(const PoissonGrid& grid);

double poisson_residual(const PoissonGrid& grid);

}  // namespace ocs
