#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace commext {

/// Dense row-major matrix of doubles. Small fixed-size problems only; no
/// view/striding machinery.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  double* row_ptr(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
  const double* row_ptr(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
std::vector<double> operator*(const Matrix& a, const std::vector<double>& x);

Matrix transpose(const Matrix& a);
Matrix commutator(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);

/// Frobenius distance from the identity of a*a^T; oriented checks live in
/// the callers.
double orthogonality_residual(const Matrix& rows);

/// Symmetric matrix. Construction symmetrizes (a + a^T)/2 and rejects
/// non-finite entries; the stored matrix is exactly symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  int dim() const { return mat_.rows(); }
  const Matrix& matrix() const { return mat_; }
  double operator()(int i, int j) const { return mat_(i, j); }

 private:
  Matrix mat_;
};

/// n x N matrix (N >= n) with orthonormal rows, validated at construction.
class OrthonormalRows {
 public:
  OrthonormalRows(Matrix m, double tol = 1e-8);

  int n() const { return mat_.rows(); }
  int N() const { return mat_.cols(); }
  const Matrix& matrix() const { return mat_; }
  double residual() const { return residual_; }

 private:
  Matrix mat_;
  double residual_ = 0.0;
};

}  // namespace commext
