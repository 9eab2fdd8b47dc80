#include "commext/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace commext {

namespace {

double offdiag_sq(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return s;
}

// A <- G^T A G and V <- V G for the rotation by theta in the (p, r) plane.
void apply_rotation(Matrix& a, Matrix& v, int p, int r, double c, double s) {
  const int n = a.rows();
  for (int k = 0; k < n; ++k) {
    const double akp = a(k, p), akr = a(k, r);
    a(k, p) = c * akp - s * akr;
    a(k, r) = s * akp + c * akr;
  }
  for (int k = 0; k < n; ++k) {
    const double apk = a(p, k), ark = a(r, k);
    a(p, k) = c * apk - s * ark;
    a(r, k) = s * apk + c * ark;
  }
  for (int k = 0; k < v.rows(); ++k) {
    const double vkp = v(k, p), vkr = v(k, r);
    v(k, p) = c * vkp - s * vkr;
    v(k, r) = s * vkp + c * vkr;
  }
}

}  // namespace

EigenDecomposition sym_eigen(const SymMatrix& sym, double tol, int max_sweeps) {
  const int n = sym.dim();
  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(n);
  const double norm = frobenius_norm(a);
  const double target = (norm > 0.0 ? tol * norm : 0.0);

  if (n > 1 && norm > 0.0) {
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
      for (int p = 0; p < n - 1; ++p)
        for (int r = p + 1; r < n; ++r) {
          const double apr = a(p, r);
          if (std::fabs(apr) < 1e-300) continue;
          // classic Jacobi annihilation angle
          const double diff = a(r, r) - a(p, p);
          double t;
          if (std::fabs(apr) < 1e-18 * std::fabs(diff)) {
            t = apr / diff;
          } else {
            const double phi = diff / (2.0 * apr);
            t = 1.0 / (std::fabs(phi) + std::sqrt(phi * phi + 1.0));
            if (phi < 0.0) t = -t;
          }
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          apply_rotation(a, v, p, r, c, s);
          a(p, r) = 0.0;
          a(r, p) = 0.0;
        }
      converged = std::sqrt(offdiag_sq(a)) <= target;
    }
    if (!converged && std::sqrt(offdiag_sq(a)) > target)
      throw std::runtime_error("sym_eigen: no convergence, off-diagonal residual " +
                               std::to_string(std::sqrt(offdiag_sq(a))));
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int col = 0; col < n; ++col) {
    const int src = order[col];
    out.values[col] = a(src, src);
    double mx = 0.0;
    for (int i = 0; i < n; ++i) mx = std::max(mx, std::fabs(v(i, src)));
    double sign = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::fabs(v(i, src)) > 0.1 * mx) {
        sign = v(i, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (int i = 0; i < n; ++i) out.vectors(i, col) = sign * v(i, src);
  }
  return out;
}

namespace {

// One-sided Jacobi: orthogonalize the columns of a by plane rotations,
// accumulated in v. Works on the matrix itself rather than a^T a, so exactly
// dependent columns come out with norm ~ eps * sigma_max instead of the
// sqrt(eps) * sigma_max floor that squaring the problem would impose; rank
// decisions at rel_tol 1e-10 stay reliable.
void jacobi_columns(Matrix& a, Matrix& v) {
  const int m = a.rows(), n = a.cols();
  v = Matrix::identity(n);
  double fro2 = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) fro2 += a(i, j) * a(i, j);
  // columns this far below the matrix scale are rounding noise; their
  // computed angles are meaningless and re-rotating them never converges
  const double floor2 = 1e-30 * fro2;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < m; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (app <= floor2 || aqq <= floor2) continue;
        if (apq == 0.0 || std::fabs(apq) <= 1e-14 * std::sqrt(app) * std::sqrt(aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
        for (int i = 0; i < m; ++i) {
          const double x = a(i, p), y = a(i, q);
          a(i, p) = c * x - s * y;
          a(i, q) = s * x + c * y;
        }
        for (int i = 0; i < n; ++i) {
          const double x = v(i, p), y = v(i, q);
          v(i, p) = c * x - s * y;
          v(i, q) = s * x + c * y;
        }
      }
    if (!rotated) return;
  }
  throw std::runtime_error("singular value iteration did not converge");
}

std::vector<double> column_norms(const Matrix& a) {
  std::vector<double> out(a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
    out[j] = std::sqrt(s);
  }
  return out;
}

}  // namespace

std::vector<double> singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return {};
  Matrix a = m.cols() <= m.rows() ? m : transpose(m);
  Matrix v;
  jacobi_columns(a, v);
  std::vector<double> sigma = column_norms(a);
  std::sort(sigma.begin(), sigma.end(), [](double x, double y) { return x > y; });
  return sigma;
}

int numerical_rank(const Matrix& m, double rel_tol) {
  const std::vector<double> sigma = singular_values(m);
  if (sigma.empty() || sigma[0] == 0.0) return 0;
  int r = 0;
  for (double s : sigma)
    if (s > rel_tol * sigma[0]) ++r;
  return r;
}

Matrix null_space(const Matrix& m, double rel_tol) {
  const int nc = m.cols();
  if (nc == 0) return Matrix(0, 0);
  Matrix a = m;
  Matrix v;
  jacobi_columns(a, v);
  const std::vector<double> sigma = column_norms(a);
  const double sigma_max = *std::max_element(sigma.begin(), sigma.end());
  std::vector<int> keep;
  for (int j = 0; j < nc; ++j)
    if (sigma[j] <= rel_tol * sigma_max) keep.push_back(j);
  std::sort(keep.begin(), keep.end(), [&](int x, int y) { return sigma[x] < sigma[y]; });
  Matrix kernel(nc, static_cast<int>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    for (int i = 0; i < nc; ++i) kernel(i, static_cast<int>(j)) = v(i, keep[j]);
  return kernel;
}

Matrix complete_orthonormal(const OrthonormalRows& q) {
  const int n = q.n(), full = q.N();
  Matrix out(full, full);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < full; ++j) out(i, j) = q.matrix()(i, j);
  int have = n;
  for (int e = 0; e < full && have < full; ++e) {
    std::vector<double> v(full, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (int b = 0; b < have; ++b) {
        double dot = 0.0;
        for (int j = 0; j < full; ++j) dot += v[j] * out(b, j);
        for (int j = 0; j < full; ++j) v[j] -= dot * out(b, j);
      }
      if (pass == 0) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (std::sqrt(norm) < 0.05) {
          v.clear();
          break;
        }
      }
    }
    if (v.empty()) continue;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 0.05) continue;
    for (int j = 0; j < full; ++j) out(have, j) = v[j] / norm;
    ++have;
  }
  if (have < full) throw std::runtime_error("complete_orthonormal: basis completion stalled");
  return out;
}

JointEigenSystem simultaneous_diagonalize(const std::vector<SymMatrix>& mats, double tol,
                                          double commute_tol) {
  if (mats.empty()) throw std::invalid_argument("simultaneous_diagonalize: empty family");
  const int n = mats[0].dim();
  for (const auto& m : mats)
    if (m.dim() != n) throw std::invalid_argument("simultaneous_diagonalize: dimension mismatch");

  double max_norm = 0.0;
  for (const auto& m : mats) max_norm = std::max(max_norm, frobenius_norm(m.matrix()));
  if (commute_tol < 0.0) commute_tol = 1e-8 * max_norm;
  for (std::size_t i = 0; i < mats.size(); ++i)
    for (std::size_t j = i + 1; j < mats.size(); ++j) {
      const double c = frobenius_norm(commutator(mats[i].matrix(), mats[j].matrix()));
      if (c > commute_tol)
        throw std::invalid_argument("simultaneous_diagonalize: matrices do not commute (residual " +
                                    std::to_string(c) + ")");
    }

  std::vector<Matrix> a;
  a.reserve(mats.size());
  for (const auto& m : mats) a.push_back(m.matrix());
  Matrix v = Matrix::identity(n);

  double total_norm_sq = 0.0;
  for (const auto& m : a) {
    const double f = frobenius_norm(m);
    total_norm_sq += f * f;
  }
  const double target = tol * std::sqrt(total_norm_sq);

  auto total_off = [&]() {
    double s = 0.0;
    for (const auto& m : a) s += offdiag_sq(m);
    return std::sqrt(s);
  };

  const int max_sweeps = 100;
  if (n > 1 && total_norm_sq > 0.0) {
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      if (total_off() <= target) break;
      for (int p = 0; p < n - 1; ++p)
        for (int r = p + 1; r < n; ++r) {
          // Rotating (p, r) only changes the summed off-diagonal squares
          // through the (p, r) entries, so the angle objective is cheap.
          auto f = [&](double theta) {
            const double c2 = std::cos(2.0 * theta), s2 = std::sin(2.0 * theta);
            double s = 0.0;
            for (const auto& m : a) {
              const double entry = c2 * m(p, r) + 0.5 * s2 * (m(p, p) - m(r, r));
              s += entry * entry;
            }
            return s;
          };
          const double theta = rotation_angle_minimize(f);
          if (theta == 0.0) continue;
          const double c = std::cos(theta), s = std::sin(theta);
          for (auto& m : a) {
            Matrix dummy(0, 0);
            apply_rotation(m, dummy, p, r, c, s);
          }
          for (int k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkr = v(k, r);
            v(k, p) = c * vkp - s * vkr;
            v(k, r) = s * vkp + c * vkr;
          }
        }
    }
  }

  JointEigenSystem out;
  out.offdiag_residual = total_off();
  out.values.assign(mats.size(), std::vector<double>(n));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    for (std::size_t m = 0; m < a.size(); ++m) {
      if (a[m](x, x) < a[m](y, y)) return true;
      if (a[m](x, x) > a[m](y, y)) return false;
    }
    return x < y;
  });

  out.vectors = Matrix(n, n);
  for (int col = 0; col < n; ++col) {
    const int src = order[col];
    for (std::size_t m = 0; m < a.size(); ++m) out.values[m][col] = a[m](src, src);
    double mx = 0.0;
    for (int i = 0; i < n; ++i) mx = std::max(mx, std::fabs(v(i, src)));
    double sign = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::fabs(v(i, src)) > 0.1 * mx) {
        sign = v(i, src) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (int i = 0; i < n; ++i) out.vectors(i, col) = sign * v(i, src);
  }
  return out;
}

LuSolver::LuSolver(Matrix m, double pivot_tol) : lu_(std::move(m)) {
  const int n = lu_.rows();
  if (n != lu_.cols()) throw std::invalid_argument("LuSolver: matrix not square");
  perm_.resize(n);
  std::iota(perm_.begin(), perm_.end(), 0);
  const double scale = max_abs(lu_);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(lu_(i, k)) > std::fabs(lu_(piv, k))) piv = i;
    if (std::fabs(lu_(piv, k)) <= pivot_tol * scale)
      throw std::runtime_error("LuSolver: singular system");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
      std::swap(perm_[k], perm_[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      lu_(i, k) /= lu_(k, k);
      const double f = lu_(i, k);
      for (int j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
}

std::vector<double> LuSolver::solve(std::vector<double> b) const {
  std::vector<double> x;
  solve(b, x);
  return x;
}

void LuSolver::solve(const std::vector<double>& b, std::vector<double>& x) const {
  const int n = lu_.rows();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("LuSolver::solve: size mismatch");
  x.resize(n);
  for (int i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (int i = 0; i < n; ++i) {
    const double* row = lu_.row_ptr(i);
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= row[j] * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    const double* row = lu_.row_ptr(i);
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= row[j] * x[j];
    x[i] = s / row[i];
  }
}

}  // namespace commext
