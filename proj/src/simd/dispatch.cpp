#include <atomic>
#include <cstdlib>
#include <string>

#include "ocsynth/simd/kernels.hpp"

namespace ocs::simd {
namespace {

bool host_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("OCSYNTH_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && host_has_avx2()) return Isa::kAvx2;
  }
  return host_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::kScalar || host_has_avx2(); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) {
  if (!isa_supported(isa)) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

const KernelTable& kernels_for(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::kAvx2) return detail::kAvx2Kernels;
#endif
  (void)isa;
  return detail::kScalarKernels;
}

const KernelTable& kernels() { return kernels_for(active_isa()); }

}  // namespace ocs::simd
