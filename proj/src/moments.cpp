#include "commext/moments.hpp"

#include <cmath>

namespace commext {

long long binomial_ll(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long v = 1;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

int binomial(int n, int k) { return static_cast<int>(binomial_ll(n, k)); }

namespace {

constexpr double kPi = 3.14159265358979323846;

double power_rule(double a, double b, int m) {
  // integral of x^m over [a, b]
  return (std::pow(b, m + 1) - std::pow(a, m + 1)) / (m + 1);
}

double square_1d(int m) { return m % 2 ? 0.0 : 2.0 / (m + 1); }

double odd_double_factorial(int m) {
  // (m)!! for odd m >= -1
  double v = 1.0;
  for (int k = m; k >= 3; k -= 2) v *= k;
  return v;
}

double even_double_factorial(int m) {
  double v = 1.0;
  for (int k = m; k >= 2; k -= 2) v *= k;
  return v;
}

double disk_moment(int mx, int my) {
  if (mx % 2 || my % 2) return 0.0;
  // polar form: pi/(j+k+1) * (2j-1)!!(2k-1)!!/(2j+2k)!!
  const int j = mx / 2, k = my / 2;
  return kPi / (j + k + 1) * odd_double_factorial(mx - 1) * odd_double_factorial(my - 1) /
         even_double_factorial(mx + my);
}

double gaussian_1d(int m) {
  if (m % 2) return 0.0;
  // integral of x^m e^{-x^2} over R
  return std::sqrt(kPi) * odd_double_factorial(m - 1) / std::pow(2.0, m / 2);
}

double shifted_square_1d(int m, double c, double r) {
  // integral of x^m over [c-r, c+r], expanded about the center so small r
  // does not cancel
  double s = 0.0;
  for (int k = 1; k <= m + 1; k += 2)
    s += static_cast<double>(binomial_ll(m + 1, k)) * std::pow(c, m + 1 - k) * std::pow(r, k);
  return 2.0 * s / (m + 1);
}

}  // namespace

WeightedDomain WeightedDomain::interval(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("interval: need a < b");
  WeightedDomain d(DomainKind::interval, 1);
  d.a_ = a;
  d.b_ = b;
  return d;
}

WeightedDomain WeightedDomain::square() { return WeightedDomain(DomainKind::square, 2); }

WeightedDomain WeightedDomain::unit_disk() { return WeightedDomain(DomainKind::unit_disk, 2); }

WeightedDomain WeightedDomain::gaussian_plane() {
  return WeightedDomain(DomainKind::gaussian_plane, 2);
}

WeightedDomain WeightedDomain::square_minus_square(double r) {
  if (!(r >= 0.0 && r <= 0.4)) throw std::invalid_argument("square_minus_square: r outside [0, 2/5]");
  WeightedDomain d(DomainKind::square_minus_square, 2);
  d.r_ = r;
  return d;
}

std::string WeightedDomain::name() const {
  switch (kind_) {
    case DomainKind::interval:
      return "interval";
    case DomainKind::square:
      return "square";
    case DomainKind::unit_disk:
      return "unit_disk";
    case DomainKind::gaussian_plane:
      return "gaussian_plane";
    case DomainKind::square_minus_square:
      return "square_minus_square";
  }
  return "unknown";
}

double WeightedDomain::moment(const MultiIndex& m) const {
  if (static_cast<int>(m.size()) != dim_)
    throw std::invalid_argument("moment: multi-index size does not match dimension");
  for (int c : m)
    if (c < 0) throw std::invalid_argument("moment: negative exponent");
  switch (kind_) {
    case DomainKind::interval:
      return power_rule(a_, b_, m[0]);
    case DomainKind::square:
      return square_1d(m[0]) * square_1d(m[1]);
    case DomainKind::unit_disk:
      return disk_moment(m[0], m[1]);
    case DomainKind::gaussian_plane:
      return gaussian_1d(m[0]) * gaussian_1d(m[1]);
    case DomainKind::square_minus_square:
      return square_1d(m[0]) * square_1d(m[1]) -
             shifted_square_1d(m[0], 0.4, r_) * shifted_square_1d(m[1], 0.6, r_);
  }
  throw std::invalid_argument("moment: unsupported domain kind");
}

static void fill_monomials(int d, int deg, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (static_cast<int>(cur.size()) == d - 1) {
    cur.push_back(deg);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = deg; e >= 0; --e) {
    cur.push_back(e);
    fill_monomials(d, deg - e, cur, out);
    cur.pop_back();
  }
}

std::vector<MultiIndex> graded_monomials(int d, int max_degree) {
  if (d < 1) throw std::invalid_argument("graded_monomials: d must be >= 1");
  std::vector<MultiIndex> out;
  MultiIndex cur;
  for (int deg = 0; deg <= max_degree; ++deg) fill_monomials(d, deg, cur, out);
  return out;
}

double GradedBasis::evaluate(int a, const std::vector<double>& x) const {
  double s = 0.0;
  for (int j = 0; j < size(); ++j) {
    const double c = coeffs(a, j);
    if (c == 0.0) continue;
    double t = c;
    for (int k = 0; k < d; ++k)
      for (int e = 0; e < monomials[j][k]; ++e) t *= x[k];
    s += t;
  }
  return s;
}

GradedBasis gram_schmidt_basis(const WeightedDomain& domain, int q) {
  if (q < 0) throw std::invalid_argument("gram_schmidt_basis: q must be >= 0");
  GradedBasis basis;
  basis.q = q;
  basis.d = domain.dim();
  basis.monomials = graded_monomials(basis.d, q);
  const int n = static_cast<int>(basis.monomials.size());

  Matrix gram(n, n);
  MultiIndex sum(basis.d);
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      for (int t = 0; t < basis.d; ++t) sum[t] = basis.monomials[j][t] + basis.monomials[k][t];
      gram(j, k) = gram(k, j) = domain.moment(sum);
    }
  double max_diag = 0.0;
  for (int j = 0; j < n; ++j) max_diag = std::max(max_diag, gram(j, j));

  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    // <u, v> under the moment functional; u, v are coefficient rows
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      if (u[j] == 0.0) continue;
      double t = 0.0;
      for (int k = 0; k < n; ++k) t += gram(j, k) * v[k];
      s += u[j] * t;
    }
    return s;
  };

  basis.coeffs = Matrix(n, n);
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (int a = 0; a < n; ++a) {
    std::vector<double> v(n, 0.0);
    v[a] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (int b = 0; b < a; ++b) {
        const double proj = dot(v, rows[b]);
        for (int j = 0; j < n; ++j) v[j] -= proj * rows[b][j];
      }
    const double norm_sq = dot(v, v);
    if (!(norm_sq > 1e-12 * max_diag))
      throw std::runtime_error("gram_schmidt_basis: degenerate moment functional");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    if (v[a] < 0.0)
      for (double& x : v) x = -x;
    rows.push_back(v);
    for (int j = 0; j < n; ++j) basis.coeffs(a, j) = v[j];
  }

  basis.block_sizes.resize(q + 1);
  for (int m = 0; m <= q; ++m) basis.block_sizes[m] = binomial(basis.d - 1 + m, basis.d - 1);
  return basis;
}

CoordinateMatrices coordinate_matrices(const WeightedDomain& domain, const GradedBasis& basis) {
  const int n = basis.size();
  const int d = basis.d;
  CoordinateMatrices out;
  out.block_sizes = basis.block_sizes;

  std::vector<int> degree(n);
  {
    int a = 0;
    for (int m = 0; m < static_cast<int>(basis.block_sizes.size()); ++m)
      for (int c = 0; c < basis.block_sizes[m]; ++c) degree[a++] = m;
  }

  MultiIndex sum(d);
  for (int i = 0; i < d; ++i) {
    Matrix shifted(n, n);  // <m_j | x_i m_k>
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        for (int t = 0; t < d; ++t) sum[t] = basis.monomials[j][t] + basis.monomials[k][t];
        sum[i] += 1;
        shifted(j, k) = shifted(k, j) = domain.moment(sum);
      }
    Matrix a = basis.coeffs * shifted * transpose(basis.coeffs);
    SymMatrix sym(std::move(a));

    double band_violation = 0.0;
    for (int p = 0; p < n; ++p)
      for (int r = 0; r < n; ++r)
        if (std::abs(degree[p] - degree[r]) >= 2)
          band_violation = std::max(band_violation, std::fabs(sym(p, r)));
    if (band_violation > 1e-10 * std::max(1.0, max_abs(sym.matrix())))
      throw std::runtime_error("coordinate_matrices: block tridiagonal structure violated");
    out.mats.push_back(std::move(sym));
  }
  return out;
}

}  // namespace commext
