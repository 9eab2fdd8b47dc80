#pragma once

#include <cstdint>
#include <random>

#include "commext/matrix.hpp"

namespace commext {

/// Seeded generator for reproducible fixtures and multistarts. Derived
/// streams (per start index) are independent of thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double gaussian() { return normal_(eng_); }
  double uniform() { return unif_(eng_); }

  Matrix gaussian_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = gaussian();
    return m;
  }

  SymMatrix gaussian_symmetric(int n) { return SymMatrix(gaussian_matrix(n, n)); }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 step keeps nearby seeds decorrelated
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace commext
