#include "inbet/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "inbet/kernels.hpp"

namespace inbet {

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw Error("Mat: data length " + std::to_string(data_.size()) + " does not match " +
                std::to_string(rows_) + "x" + std::to_string(cols_));
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Mat m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw Error("Mat::from_rows: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Mat::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows())
    throw Error("matmul: shape mismatch " + a.shape_string() + " * " + b.shape_string());
  Mat c(a.rows(), b.cols());
  simd::active_kernels().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols())
    throw Error("matmul_nt: shape mismatch " + a.shape_string() + " * " + b.shape_string() +
                "^T");
  Mat c(a.rows(), b.rows());
  simd::active_kernels().gemm_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows())
    throw Error("matmul_tn: shape mismatch " + a.shape_string() + "^T * " + b.shape_string());
  Mat c(a.cols(), b.cols());
  simd::active_kernels().gemm_tn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw Error("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace inbet
