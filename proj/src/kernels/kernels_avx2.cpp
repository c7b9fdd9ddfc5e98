// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include "inbet/kernels.hpp"

namespace inbet::simd {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nn_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      axpy_avx2(aip, b + p * n, ci, n);
    }
  }
}

void gemm_nt_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_avx2(a + i * k, b + j * k, k);
}

void gemm_tn_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n) {
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i < k; ++i) {
      const double ari = a[r * k + i];
      if (ari == 0.0) continue;
      axpy_avx2(ari, b + r * n, c + i * n, n);
    }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", dot_avx2, axpy_avx2, gemm_nn_avx2, gemm_nt_avx2,
                                 gemm_tn_avx2};
  return table;
}

}  // namespace inbet::simd
