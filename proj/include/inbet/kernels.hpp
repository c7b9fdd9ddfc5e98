#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by the network and its gradients.
// Every routine has a portable scalar reference and, on x86-64, an AVX2/FMA
// variant. The active table is chosen once at startup from CPUID; setting
// INBET_SIMD=scalar in the environment forces the reference path.

namespace inbet::simd {

struct KernelTable {
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // c(m x n) += a(m x k) * b(k x n), all row-major and contiguous
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // c(m x n) += a(m x k) * b(n x k)^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // c(k x n) += a(m x k)^T * b(m x n)
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the binary was built without AVX2 variants or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// Table used by the library; fixed for the lifetime of the process.
const KernelTable& active_kernels();

}  // namespace inbet::simd
