#pragma once

#include <optional>
#include <string>
#include <vector>

#include "commext/extensions.hpp"
#include "commext/matrix.hpp"
#include "commext/moments.hpp"

namespace commext {

struct CubatureRule {
  int d = 0;
  int degree = 0;  // declared exactness, 2q+1
  std::vector<std::vector<double>> nodes;
  std::vector<double> weights;
  std::string provenance;  // radon_closed_form | extension_search | jacobi_1d
  std::vector<std::string> warnings;
};

struct VerificationReport {
  double max_error = 0.0;  // scaled: |sum - moment| / max(1, |moment|)
  MultiIndex worst_monomial;
  std::vector<double> per_degree_error;  // index = total degree
  double tol = 1e-9;
  bool passed = false;
  bool theorems_checked = false;
  bool theorem12_ok = false;
  bool theorem13_ok = false;
};

/// Joint-diagonalizes the extension, reads nodes off the eigenvalue tuples
/// and weights off the squared first eigenvector components. Nodes sorted
/// lexicographically (coordinates rounded to 1e-9 for the comparison).
CubatureRule rule_from_extension(const ExtensionCandidate& c, const GradedBasis& basis,
                                 const WeightedDomain& domain);

/// Gaussian quadrature via the (q+1)-point Jacobi matrix of the interval
/// domain.
CubatureRule gauss_1d(const WeightedDomain& domain, int q);

/// v, w with v w^T - w v^T = -C for a rank-2 antisymmetric 3x3 C.
void cross_factor(const Matrix& c, std::vector<double>& v, std::vector<double>& w,
                  double tol = 1e-10);

struct RadonResult {
  std::vector<CubatureRule> rules;
  std::vector<ExtensionCandidate> extensions;
  int kernel_dim = 0;
  Matrix kernel;  // 6 x kernel_dim orthonormal basis of ker [v w A1v A1w A2v A2w]
  std::vector<std::string> warnings;
};

/// Closed-form 7-node degree-5 construction for a 2-D domain: factor the
/// commutator, build the six-vector matrix, solve for its kernel, apply the
/// admissible kernel vector(s). family_param in [0,1) picks a member when
/// the kernel is two-dimensional.
RadonResult radon_solve(const WeightedDomain& domain,
                        std::optional<double> family_param = std::nullopt);

VerificationReport verify_rule(const CubatureRule& rule, const WeightedDomain& domain,
                               double tol = 1e-9);

/// Node-count lower bound: N >= C(d+q,d) + ceil(max rank([A_i,A_j]) / 2).
bool theorem12_check(const CubatureRule& rule, const CoordinateMatrices& mats);

/// Node span covers the spectrum of every A_i:
/// min node_i <= min eig(A_i) + 1e-9 and max node_i >= max eig(A_i) - 1e-9.
bool theorem13_check(const CubatureRule& rule, const CoordinateMatrices& mats);

enum class SearchMethod { automatic, radon, minimize_s_method, gradient_flow_method, jacobi_1d };

struct SearchOpts {
  SearchMethod method = SearchMethod::automatic;
  std::uint64_t seed = 0;
  int sweeps = 500;
  long iters = 200000;
  int multistarts = 8;
  double verify_tol = 1e-9;
};

struct SearchOutcome {
  bool success = false;
  CubatureRule rule;
  VerificationReport report;
  ExtensionCandidate candidate;
  std::string failure_reason;
};

/// End-to-end search: basis, coordinate matrices, zero-block spec, extension
/// search (minimize_s and/or gradient_flow), rule extraction, verification.
SearchOutcome search_rule(const WeightedDomain& domain, int q, int target_size,
                          const SearchOpts& opts);

}  // namespace commext
