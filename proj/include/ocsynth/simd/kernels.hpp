#pragma once

// Data-parallel inner loops shared by the imaging code. Each kernel has a
// scalar reference and an AVX2 variant; the variant is picked once at startup
// from cpuid and can be pinned with force_isa() or OCSYNTH_SIMD=scalar|avx2.
// Variants are required to produce bit-identical output.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace ocs::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Returns false (and leaves the dispatch unchanged) if the host lacks `isa`.
bool force_isa(Isa isa);

struct KernelTable {
  // dst[i] = sum_k taps[k] * src[i + k], k in [0, ntaps); src holds n + ntaps - 1 samples.
  void (*convolve_row)(const float* src, const float* taps, int ntaps, float* dst, int n);
  // dst[i] = sum_k taps[k] * rows[k][i].
  void (*convolve_cols)(const float* const* rows, const float* taps, int ntaps, float* dst, int n);
  // Sobel over a 3-row window of padded rows (each n + 2 samples, centre at i + 1).
  void (*sobel_row)(const float* above, const float* mid, const float* below, float* gx, float* gy,
                    float* mag, int n);
  // dst = round((fg * a + dst * (255 - a)) / 255) per sample.
  void (*alpha_over)(const std::uint8_t* fg, const std::uint8_t* alpha, std::uint8_t* dst, int n);
  // cover[i] = min(255, cover[i] + mask[i]).
  void (*accumulate)(const std::uint8_t* mask, std::uint8_t* cover, int n);
  // Number of samples with cover[i] >= k.
  std::size_t (*count_at_least)(const std::uint8_t* cover, int n, std::uint8_t k);
  // max_i interior[i] * |4 u[i] - up[i] - down[i] - u[i-1] - u[i+1] - g[i]|; u is padded by one
  // sample on each side (u[-1], u[n] valid).
  float (*poisson_residual)(const float* up, const float* u, const float* down, const float* g,
                            const float* interior, int n);
};

const KernelTable& kernels();
const KernelTable& kernels_for(Isa isa);

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable kAvx2Kernels;
#endif
}  // namespace detail

}  // namespace ocs::simd
