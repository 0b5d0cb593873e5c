#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "csma/rng.hpp"

namespace csma {

/// Dense row-major matrix of doubles. Batches store one sample per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  /// 1 x n matrix holding a copy of `values`.
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  /// "rows x cols", for error messages.
  std::string shape() const;

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// All operations below are pure and throw csma::Error on bad shapes. Results
// are checked for finiteness; a non-finite entry raises ErrorKind::numeric.

/// Inner product summed in four interleaved partial sums. matmul_transposed
/// and the per-sample training kernels share it, so a row encoded alone and
/// the same row encoded in a batch agree bitwise.
double dot(std::span<const double> a, std::span<const double> b);
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materialising the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double factor);

/// Logistic function 1 / (1 + e^-z), evaluated in the overflow-safe branch
/// for each sign. Saturated values are pinned to the nearest doubles inside
/// (0, 1) so outputs always lie in the open interval.
double sigmoid(double z) noexcept;
Matrix sigmoid(const Matrix& m);

double frobenius_sq(const Matrix& m);
/// 1 x cols matrix of per-column means.
Matrix column_mean(const Matrix& m);

/// Entries uniform in [-scale, +scale].
Matrix rand_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale);

/// Rows of `m` listed by `indices`, in that order.
Matrix select_rows(const Matrix& m, std::span<const std::size_t> indices);
Matrix vstack(const Matrix& top, const Matrix& bottom);

/// Throws ErrorKind::numeric naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

}  // namespace csma
