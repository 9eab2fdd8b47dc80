#pragma once

// Test-side reference computations. Everything here is deliberately
// independent of the library's eigensolver / Gram-Schmidt path: a local
// elimination solver, a Chebyshev-basis construction of Gauss rules, and
// geometric multiset matching for node sets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace testutil {

inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const int n = static_cast<int>(a.size());
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    if (std::fabs(a[c][c]) < 1e-14) throw std::runtime_error("solve_dense: singular");
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (int c = n - 1; c >= 0; --c) {
    double s = b[c];
    for (int k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
    x[c] = s / a[c][c];
  }
  return x;
}

// integral of the Chebyshev polynomial T_m over [-1, 1] with weight 1
inline double cheb_integral(int m) {
  if (m % 2) return 0.0;
  return 2.0 / (1.0 - static_cast<double>(m) * m);
}

// <T_j, T_k> over [-1, 1] via the product rule T_j T_k = (T_{j+k} + T_{|j-k|}) / 2
inline double cheb_gram(int j, int k) {
  return 0.5 * (cheb_integral(j + k) + cheb_integral(std::abs(j - k)));
}

// Clenshaw evaluation of sum_j c_j T_j(x)
inline double clenshaw(const std::vector<double>& c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (int j = static_cast<int>(c.size()) - 1; j >= 1; --j) {
    const double t = 2.0 * x * b1 - b2 + c[j];
    b2 = b1;
    b1 = t;
  }
  return x * b1 - b2 + (c.empty() ? 0.0 : c[0]);
}

template <class F>
inline std::vector<double> scan_roots(F&& f, double lo, double hi, int grid = 20000) {
  std::vector<double> roots;
  double xa = lo, fa = f(lo);
  for (int i = 1; i <= grid; ++i) {
    const double xb = lo + (hi - lo) * i / grid;
    const double fb = f(xb);
    if (fa == 0.0) roots.push_back(xa);
    if (fa * fb < 0.0) {
      double a = xa, b = xb, va = fa;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        const double vm = f(m);
        if (va * vm <= 0.0)
          b = m;
        else {
          a = m;
          va = vm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb;
    fa = fb;
  }
  return roots;
}

struct OracleRule {
  std::vector<double> nodes, weights;  // nodes ascending
};

// Gauss rule on (-1, 1), weight 1, q+1 nodes, straight from the moment
// equations. Working in the Chebyshev basis keeps the linear systems well
// conditioned where the monomial-basis Hankel systems are not.
inline OracleRule gauss_oracle(int q) {
  const int m = q + 1;  // degree of the orthogonal polynomial whose roots we need
  // p = T_m + sum_{j<m} c_j T_j with <p, T_k> = 0 for k = 0..m-1
  std::vector<std::vector<double>> g(m, std::vector<double>(m));
  std::vector<double> rhs(m);
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) g[k][j] = cheb_gram(k, j);
    rhs[k] = -cheb_gram(k, m);
  }
  std::vector<double> c = solve_dense(std::move(g), std::move(rhs));
  c.push_back(1.0);

  OracleRule out;
  out.nodes = scan_roots([&](double x) { return clenshaw(c, x); }, -1.0, 1.0);
  if (static_cast<int>(out.nodes.size()) != m)
    throw std::runtime_error("gauss_oracle: root count mismatch");

  // weights from exactness on T_0..T_q (Chebyshev Vandermonde system)
  std::vector<std::vector<double>> v(m, std::vector<double>(m));
  std::vector<double> mom(m);
  for (int j = 0; j < m; ++j) {
    mom[j] = cheb_integral(j);
    for (int k = 0; k < m; ++k) {
      std::vector<double> e(j + 1, 0.0);
      e[j] = 1.0;
      v[j][k] = clenshaw(e, out.nodes[k]);
    }
  }
  out.weights = solve_dense(std::move(v), std::move(mom));
  return out;
}

// True when the two planar node/weight sets coincide as weighted multisets
// after some common rotation about the origin.
inline bool rotation_match(const std::vector<std::vector<double>>& a,
                           const std::vector<double>& wa,
                           const std::vector<std::vector<double>>& b,
                           const std::vector<double>& wb, double tol) {
  const std::size_t n = a.size();
  if (b.size() != n || wa.size() != n || wb.size() != n) return false;

  auto try_angle = [&](double phi) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = cp * a[i][0] - sp * a[i][1];
      const double y = sp * a[i][0] + cp * a[i][1];
      bool hit = false;
      for (std::size_t j = 0; j < n && !hit; ++j) {
        if (used[j]) continue;
        if (std::fabs(b[j][0] - x) <= tol && std::fabs(b[j][1] - y) <= tol &&
            std::fabs(wb[j] - wa[i]) <= tol) {
          used[j] = true;
          hit = true;
        }
      }
      if (!hit) return false;
    }
    return true;
  };

  // anchor: the largest-radius node of a must map onto some node of b with
  // the same radius, which leaves at most n candidate angles
  std::size_t anchor = 0;
  double rmax = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::hypot(a[i][0], a[i][1]);
    if (r > rmax) {
      rmax = r;
      anchor = i;
    }
  }
  if (rmax <= tol) return try_angle(0.0);
  const double ta = std::atan2(a[anchor][1], a[anchor][0]);
  for (std::size_t j = 0; j < n; ++j) {
    const double rb = std::hypot(b[j][0], b[j][1]);
    if (std::fabs(rb - rmax) > tol) continue;
    if (try_angle(std::atan2(b[j][1], b[j][0]) - ta)) return true;
  }
  return false;
}

inline double sorted_linf(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size()) return 1e300;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

}  // namespace testutil
