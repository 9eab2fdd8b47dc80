#pragma once

#include <string>
#include <vector>

#include "commext/matrix.hpp"

namespace commext {

using MultiIndex = std::vector<int>;

enum class DomainKind { interval, square, unit_disk, gaussian_plane, square_minus_square };

/// Integration domain plus weight, realized purely as an exact moment
/// functional over monomials. No numeric quadrature anywhere: closed forms
/// only, so verification stays independent of the rules being built.
class WeightedDomain {
 public:
  static WeightedDomain interval(double a, double b);
  static WeightedDomain square();
  static WeightedDomain unit_disk();
  static WeightedDomain gaussian_plane();
  // [-1,1]^2 minus the square of half-side r centered at (2/5, 3/5)
  static WeightedDomain square_minus_square(double r);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double r() const { return r_; }
  std::string name() const;

  double moment(const MultiIndex& m) const;

 private:
  WeightedDomain(DomainKind kind, int dim) : kind_(kind), dim_(dim) {}
  DomainKind kind_;
  int dim_;
  double a_ = 0.0, b_ = 0.0, r_ = 0.0;
};

/// All monomial multi-indices in d variables of total degree <= max_degree,
/// degree-major; within a degree the exponent tuples descend
/// lexicographically (x1^k first, xd^k last).
std::vector<MultiIndex> graded_monomials(int d, int max_degree);

int binomial(int n, int k);
long long binomial_ll(int n, int k);

/// Orthonormal basis of the polynomials of degree <= q under the domain's
/// moment inner product. Row a of coeffs expresses e_a over the graded
/// monomial list; degree blocks sit contiguously.
struct GradedBasis {
  int q = 0;
  int d = 0;
  std::vector<MultiIndex> monomials;
  Matrix coeffs;                 // n x n, row a = e_a
  std::vector<int> block_sizes;  // per-degree counts, sums to n

  int size() const { return coeffs.rows(); }
  // dimension of the degree <= q-1 subspace
  int lower_dim() const { return size() - block_sizes.back(); }
  double evaluate(int a, const std::vector<double>& x) const;
};

GradedBasis gram_schmidt_basis(const WeightedDomain& domain, int q);

/// The d symmetric matrices (A_i)_{ab} = <e_a | x_i e_b>.
struct CoordinateMatrices {
  std::vector<SymMatrix> mats;
  std::vector<int> block_sizes;
};

CoordinateMatrices coordinate_matrices(const WeightedDomain& domain, const GradedBasis& basis);

}  // namespace commext
