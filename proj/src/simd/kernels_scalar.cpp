#include <algorithm>
#include <cmath>

#include "ocsynth/simd/kernels.hpp"

namespace ocs::simd {
namespace {

void convolve_row(const float* src, const float* taps, int ntaps, float* dst, int n) {
  for (int i = 0; i < n; ++i) {
    float acc = 0.0f;
    for (int k = 0; k < ntaps; ++k) acc = acc + taps[k] * src[i + k];
    dst[i] = acc;
  }
}

void convolve_cols(const float* const* rows, const float* taps, int ntaps, float* dst, int n) {
  for (int i = 0; i < n; ++i) {
    float acc = 0.0f;
    for (int k = 0; k < ntaps; ++k) acc = acc + taps[k] * rows[k][i];
    dst[i] = acc;
  }
}

void sobel_row(const float* a, const float* m, const float* b, float* gx, float* gy, float* mag,
               int n) {
  for (int i = 0; i < n; ++i) {
    // Column differences and row differences with [1 2 1] smoothing.
    const float dx = (a[i + 2] - a[i]) + 2.0f * (m[i + 2] - m[i]) + (b[i + 2] - b[i]);
    const float dy = (b[i] - a[i]) + 2.0f * (b[i + 1] - a[i + 1]) + (b[i + 2] - a[i + 2]);
    gx[i] = dx;
    gy[i] = dy;
    mag[i] = std::sqrt(dx * dx + dy * dy);
  }
}

void alpha_over(const std::uint8_t* fg, const std::uint8_t* alpha, std::uint8_t* dst, int n) {
  for (int i = 0; i < n; ++i) {
    const unsigned a = alpha[i];
    const unsigned t = fg[i] * a + dst[i] * (255u - a) + 128u;
    dst[i] = static_cast<std::uint8_t>((t + (t >> 8)) >> 8);
  }
}

void accumulate(const std::uint8_t* mask, std::uint8_t* cover, int n) {
  for (int i = 0; i < n; ++i) {
    const unsigned s = cover[i] + mask[i];
    cover[i] = static_cast<std::uint8_t>(s > 255u ? 255u : s);
  }
}

std::size_t count_at_least(const std::uint8_t* cover, int n, std::uint8_t k) {
  std::size_t c = 0;
  for (int i = 0; i < n; ++i) c += cover[i] >= k;
  return c;
}

float poisson_residual(const float* up, const float* u, const float* down, const float* g,
                       const float* interior, int n) {
  float worst = 0.0f;
  for (int i = 0; i < n; ++i) {
    const float lap = 4.0f * u[i] - up[i] - down[i] - u[i - 1] - u[i + 1];
    const float r = std::fabs(lap - g[i]) * interior[i];
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace

namespace detail {
const KernelTable kScalarKernels{convolve_row, convolve_cols,  sobel_row,       alpha_over,
                                 accumulate,   count_at_least, poisson_residual};
}

}  // namespace ocs::simd
