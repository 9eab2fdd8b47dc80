#include "commext/fixtures.hpp"

#include <cmath>
#include <stdexcept>

#include "commext/rng.hpp"

namespace commext {

PlantedFamily planted_family(int n, int target_size, int d, std::uint64_t seed) {
  const int N = target_size;
  if (n < 1 || N < n || d < 1) throw std::invalid_argument("planted_family: bad sizes");
  Rng rng(seed);
  Matrix u = rng.gaussian_matrix(N, N);
  for (int i = 0; i < N; ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (int b = 0; b < i; ++b) {
        double dot = 0.0;
        for (int j = 0; j < N; ++j) dot += u(i, j) * u(b, j);
        for (int j = 0; j < N; ++j) u(i, j) -= dot * u(b, j);
      }
    double nr = 0.0;
    for (int j = 0; j < N; ++j) nr += u(i, j) * u(i, j);
    nr = std::sqrt(nr);
    if (nr < 1e-8) throw std::runtime_error("planted_family: degenerate random frame");
    for (int j = 0; j < N; ++j) u(i, j) /= nr;
  }

  PlantedFamily out;
  for (int i = 0; i < d; ++i) {
    std::vector<double> lam(N);
    for (double& x : lam) x = rng.gaussian();
    Matrix big(N, N);
    for (int a = 0; a < N; ++a)
      for (int b = a; b < N; ++b) {
        double s = 0.0;
        for (int al = 0; al < N; ++al) s += u(a, al) * lam[al] * u(b, al);
        big(a, b) = big(b, a) = s;
      }
    Matrix top(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) top(a, b) = big(a, b);
    out.mats.emplace_back(std::move(top));
    out.extended.emplace_back(std::move(big));
  }
  return out;
}

std::vector<SymMatrix> theorem4_pair(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("theorem4_pair: n must be at least 2");
  Rng rng(seed);
  std::vector<double> v(n), w(n), mu(n);
  for (double& x : v) x = rng.gaussian();
  for (double& x : w) x = rng.gaussian();
  for (double& x : mu) x = rng.gaussian();

  Matrix a1(n, n), a2(n, n);
  for (int a = 0; a < n; ++a) {
    a1(a, a) = a + 1;  // distinct eigenvalues 1..n
    a2(a, a) = mu[a];
    for (int b = 0; b < n; ++b)
      if (a != b) a2(a, b) = (w[a] * v[b] - w[b] * v[a]) / (double(a + 1) - double(b + 1));
  }
  return {SymMatrix(a1), SymMatrix(a2)};
}

}  // namespace commext
