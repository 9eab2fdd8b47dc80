#include "commext/matrix.hpp"

#include <cmath>

namespace commext {

static void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

Matrix& Matrix::operator+=(const Matrix& o) {
  check_same_shape(*this, o, "Matrix::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  check_same_shape(*this, o, "Matrix::operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("Matrix multiply: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    double* ci = c.row_ptr(i);
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row_ptr(k);
      for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

std::vector<double> operator*(const Matrix& a, const std::vector<double>& x) {
  if (a.cols() != static_cast<int>(x.size()))
    throw std::invalid_argument("Matrix-vector multiply: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::fabs(v));
  return m;
}

bool all_finite(const Matrix& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

double orthogonality_residual(const Matrix& rows) {
  const int n = rows.rows();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      const double* ri = rows.row_ptr(i);
      const double* rj = rows.row_ptr(j);
      for (int k = 0; k < rows.cols(); ++k) dot += ri[k] * rj[k];
      const double target = (i == j) ? 1.0 : 0.0;
      s += (dot - target) * (dot - target);
    }
  return std::sqrt(s);
}

SymMatrix::SymMatrix(Matrix m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix: matrix not square");
  if (!all_finite(m)) throw std::invalid_argument("SymMatrix: non-finite entry");
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < i; ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  mat_ = std::move(m);
}

OrthonormalRows::OrthonormalRows(Matrix m, double tol) {
  if (m.rows() > m.cols()) throw std::invalid_argument("OrthonormalRows: more rows than columns");
  if (!all_finite(m)) throw std::invalid_argument("OrthonormalRows: non-finite entry");
  residual_ = orthogonality_residual(m);
  if (residual_ > tol)
    throw std::invalid_argument("OrthonormalRows: rows not orthonormal (residual " +
                                std::to_string(residual_) + ")");
  mat_ = std::move(m);
}

}  // namespace commext
