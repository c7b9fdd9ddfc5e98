#include <cstdlib>
#include <string_view>

#include "inbet/kernels.hpp"

namespace inbet::simd {

#ifdef INBET_HAVE_AVX2_KERNELS
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#ifdef INBET_HAVE_AVX2_KERNELS
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* env = std::getenv("INBET_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return *t;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace inbet::simd
