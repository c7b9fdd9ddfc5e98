#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace inbet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix of doubles. Vectors are 1 x n or n x 1.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double v);
  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b
Mat matmul(const Mat& a, const Mat& b);
// c = a * b^T
Mat matmul_nt(const Mat& a, const Mat& b);
// c = a^T * b
Mat matmul_tn(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
double max_abs_diff(const Mat& a, const Mat& b);

}  // namespace inbet
