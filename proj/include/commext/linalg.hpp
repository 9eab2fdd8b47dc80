#pragma once

#include <vector>

#include "commext/matrix.hpp"

namespace commext {

/// a = vectors * diag(values) * vectors^T, values ascending, each column's
/// first component of magnitude > 0.1 * max made positive.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;  // columns are eigenvectors
};

/// Cyclic Jacobi. tol bounds the relative reconstruction error
/// ||a - V D V^T||_F / ||a||_F. Throws on non-convergence.
EigenDecomposition sym_eigen(const SymMatrix& a, double tol = 1e-13, int max_sweeps = 100);

/// Singular values of a general matrix, descending, via the eigenvalues of
/// m^T m (or m m^T, whichever is smaller).
std::vector<double> singular_values(const Matrix& m);

/// Count of singular values above rel_tol * largest. Zero matrix has rank 0.
int numerical_rank(const Matrix& m, double rel_tol = 1e-10);

/// Columns spanning the right kernel: singular directions with sigma below
/// rel_tol * sigma_max. Returns a cols x k matrix (k possibly 0).
Matrix null_space(const Matrix& m, double rel_tol = 1e-10);

/// Extends q (n x N, orthonormal rows) to a full N x N orthogonal matrix by
/// Gram-Schmidt over the standard basis vectors in index order, skipping
/// near-dependent candidates.
Matrix complete_orthonormal(const OrthonormalRows& q);

struct JointEigenSystem {
  Matrix vectors;                           // N x N orthogonal, columns u_alpha
  std::vector<std::vector<double>> values;  // values[i][alpha] for matrix i
  double offdiag_residual = 0.0;            // sqrt(sum of squared off-diagonals) after rotation
};

/// One orthogonal basis diagonalizing every matrix in the (pairwise
/// commuting) family. Off-diagonal mass is driven down by Jacobi-like
/// sweeps that minimize the summed squares over all matrices; each pair's
/// rotation angle is found by a scan plus golden-section refinement, so
/// degenerate spectra need no special casing. commute_tol < 0 selects
/// 1e-8 * max ||a_i||_F.
JointEigenSystem simultaneous_diagonalize(const std::vector<SymMatrix>& mats, double tol = 1e-12,
                                          double commute_tol = -1.0);

/// Minimizes a smooth pi/2-periodic function of the rotation angle over
/// (-pi/4, pi/4]: 64-point scan (theta = 0 included) then golden-section
/// refinement. Guarantees f(result) <= f(0).
template <class F>
double rotation_angle_minimize(F&& f) {
  constexpr double kPi = 3.14159265358979323846;
  const double step = 0.5 * kPi / 64.0;
  double best_theta = 0.0;
  double best_val = f(0.0);
  for (int j = 1; j <= 64; ++j) {
    if (j == 32) continue;  // theta = 0 already evaluated
    const double theta = -0.25 * kPi + j * step;
    const double v = f(theta);
    if (v < best_val) {
      best_val = v;
      best_theta = theta;
    }
  }
  // golden-section refinement around the best scan point
  const double gr = 0.61803398874989484820;
  double a = best_theta - step, b = best_theta + step;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 60 && (b - a) > 1e-12; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  const double theta = 0.5 * (a + b);
  const double v = f(theta);
  if (v < best_val) return theta;
  return best_theta;
}

/// Solves m x = b in place by partial-pivot LU. Throws if a pivot falls
/// below pivot_tol * max|m|.
class LuSolver {
 public:
  explicit LuSolver(Matrix m, double pivot_tol = 1e-13);
  std::vector<double> solve(std::vector<double> b) const;
  // x and b must be distinct buffers; avoids allocation in hot loops
  void solve(const std::vector<double>& b, std::vector<double>& x) const;

 private:
  Matrix lu_;
  std::vector<int> perm_;
};

}  // namespace commext
