// AVX2 variants of the kernels in kernels_scalar.cpp. Compiled with -mavx2
// (and without FMA) so every lane performs the same operation sequence as the
// scalar loop.

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cmath>

#include "ocsynth/simd/kernels.hpp"

namespace ocs::simd {
namespace {

void convolve_row(const float* src, const float* taps, int ntaps, float* dst, int n) {
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_setzero_ps();
    for (int k = 0; k < ntaps; ++k) {
      const __m256 w = _mm256_set1_ps(taps[k]);
      acc = _mm256_add_ps(acc, _mm256_mul_ps(w, _mm256_loadu_ps(src + i + k)));
    }
    _mm256_storeu_ps(dst + i, acc);
  }
  for (; i < n; ++i) {
    float acc = 0.0f;
    for (int k = 0; k < ntaps; ++k) acc = acc + taps[k] * src[i + k];
    dst[i] = acc;
  }
}

void convolve_cols(const float* const* rows, const float* taps, int ntaps, float* dst, int n) {
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_setzero_ps();
    for (int k = 0; k < ntaps; ++k) {
      const __m256 w = _mm256_set1_ps(taps[k]);
      acc = _mm256_add_ps(acc, _mm256_mul_ps(w, _mm256_loadu_ps(rows[k] + i)));
    }
    _mm256_storeu_ps(dst + i, acc);
  }
  for (; i < n; ++i) {
    float acc = 0.0f;
    for (int k = 0; k < ntaps; ++k) acc = acc + taps[k] * rows[k][i];
    dst[i] = acc;
  }
}

void sobel_row(const float* a, const float* m, const float* b, float* gx, float* gy, float* mag,
               int n) {
  const __m256 two = _mm256_set1_ps(2.0f);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 a0 = _mm256_loadu_ps(a + i), a1 = _mm256_loadu_ps(a + i + 1),
                 a2 = _mm256_loadu_ps(a + i + 2);
    const __m256 m0 = _mm256_loadu_ps(m + i), m2 = _mm256_loadu_ps(m + i + 2);
    const __m256 b0 = _mm256_loadu_ps(b + i), b1 = _mm256_loadu_ps(b + i + 1),
                 b2 = _mm256_loadu_ps(b + i + 2);
    const __m256 dx = _mm256_add_ps(
        _mm256_add_ps(_mm256_sub_ps(a2, a0), _mm256_mul_ps(two, _mm256_sub_ps(m2, m0))),
        _mm256_sub_ps(b2, b0));
    const __m256 dy = _mm256_add_ps(
        _mm256_add_ps(_mm256_sub_ps(b0, a0), _mm256_mul_ps(two, _mm256_sub_ps(b1, a1))),
        _mm256_sub_ps(b2, a2));
    _mm256_storeu_ps(gx + i, dx);
    _mm256_storeu_ps(gy + i, dy);
    _mm256_storeu_ps(mag + i,
                     _mm256_sqrt_ps(_mm256_add_ps(_mm256_mul_ps(dx, dx), _mm256_mul_ps(dy, dy))));
  }
  for (; i < n; ++i) {
    const float dx = (a[i + 2] - a[i]) + 2.0f * (m[i + 2] - m[i]) + (b[i + 2] - b[i]);
    const float dy = (b[i] - a[i]) + 2.0f * (b[i + 1] - a[i + 1]) + (b[i + 2] - a[i + 2]);
    gx[i] = dx;
    gy[i] = dy;
    mag[i] = std::sqrt(dx * dx + dy * dy);
  }
}

void alpha_over(const std::uint8_t* fg, const std::uint8_t* alpha, std::uint8_t* dst, int n) {
  const __m256i c255 = _mm256_set1_epi16(255);
  const __m256i c128 = _mm256_set1_epi16(128);
  int i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256i f = _mm256_cvtepu8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(fg + i)));
    const __m256i a =
        _mm256_cvtepu8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(alpha + i)));
    const __m256i d = _mm256_cvtepu8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(dst + i)));
    __m256i t = _mm256_add_epi16(_mm256_mullo_epi16(f, a),
                                 _mm256_mullo_epi16(d, _mm256_sub_epi16(c255, a)));
    t = _mm256_add_epi16(t, c128);
    t = _mm256_srli_epi16(_mm256_add_epi16(t, _mm256_srli_epi16(t, 8)), 8);
    const __m128i lo = _mm256_castsi256_si128(t);
    const __m128i hi = _mm256_extracti128_si256(t, 1);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + i), _mm_packus_epi16(lo, hi));
  }
  for (; i < n; ++i) {
    const unsigned av = alpha[i];
    const unsigned t = fg[i] * av + dst[i] * (255u - av) + 128u;
    dst[i] = static_cast<std::uint8_t>((t + (t >> 8)) >> 8);
  }
}

void accumulate(const std::uint8_t* mask, std::uint8_t* cover, int n) {
  int i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i m = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(mask + i));
    const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(cover + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(cover + i), _mm256_adds_epu8(c, m));
  }
  for (; i < n; ++i) {
    const unsigned s = cover[i] + mask[i];
    cover[i] = static_cast<std::uint8_t>(s > 255u ? 255u : s);
  }
}

std::size_t count_at_least(const std::uint8_t* cover, int n, std::uint8_t k) {
  const __m256i kv = _mm256_set1_epi8(static_cast<char>(k));
  std::size_t total = 0;
  int i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(cover + i));
    const __m256i ge = _mm256_cmpeq_epi8(_mm256_max_epu8(c, kv), c);
    total += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_epi8(ge))));
  }
  for (; i < n; ++i) total += cover[i] >= k;
  return total;
}

float poisson_residual(const float* up, const float* u, const float* down, const float* g,
                       const float* interior, int n) {
  const __m256 four = _mm256_set1_ps(4.0f);
  const __m256 sign = _mm256_set1_ps(-0.0f);
  __m256 worst = _mm256_setzero_ps();
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 lap = _mm256_mul_ps(four, _mm256_loadu_ps(u + i));
    lap = _mm256_sub_ps(lap, _mm256_loadu_ps(up + i));
    lap = _mm256_sub_ps(lap, _mm256_loadu_ps(down + i));
    lap = _mm256_sub_ps(lap, _mm256_loadu_ps(u + i - 1));
    lap = _mm256_sub_ps(lap, _mm256_loadu_ps(u + i + 1));
    const __m256 r = _mm256_mul_ps(_mm256_andnot_ps(sign, _mm256_sub_ps(lap, _mm256_loadu_ps(g + i))),
                                   _mm256_loadu_ps(interior + i));
    worst = _mm256_max_ps(worst, r);
  }
  alignas(32) float lanes[8];
  _mm256_store_ps(lanes, worst);
  float best = 0.0f;
  for (float v : lanes) best = std::max(best, v);
  for (; i < n; ++i) {
    const float lap = 4.0f * u[i] - up[i] - down[i] - u[i - 1] - u[i + 1];
    best = std::max(best, std::fabs(lap - g[i]) * interior[i]);
  }
  return best;
}

}  // namespace

namespace detail {
const KernelTable kAvx2Kernels{convolve_row, convolve_cols,  sobel_row,       alpha_over,
                               accumulate,   count_at_least, poisson_residual};
}

}  // namespace ocs::simd
