#include "inbet/kernels.hpp"

namespace inbet::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nn_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      axpy_scalar(aip, b + p * n, ci, n);
    }
  }
}

void gemm_nt_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_scalar(a + i * k, b + j * k, k);
}

void gemm_tn_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n) {
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i < k; ++i) {
      const double ari = a[r * k + i];
      if (ari == 0.0) continue;
      axpy_scalar(ari, b + r * n, c + i * n, n);
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, gemm_nn_scalar,
                                 gemm_nt_scalar, gemm_tn_scalar};
  return table;
}

}  // namespace inbet::simd
