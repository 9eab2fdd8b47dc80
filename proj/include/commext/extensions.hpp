#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "commext/linalg.hpp"
#include "commext/matrix.hpp"

namespace commext {

/// Entries of the extension forced to zero: rows 0..rows-1 of the added
/// columns n..N-1 (and the transposed block). For cubature problems rows is
/// the dimension of the degree <= q-1 polynomial subspace.
struct ZeroBlockSpec {
  int rows = 0;
};

/// Result of an extension search. Q holds the top n rows of the orthogonal
/// N x N matrix Qt; extended[i] = Qt^T-completion conjugation Qt Lambda_i
/// Qt^T (search route) or the structured matrices themselves (flow route).
struct ExtensionCandidate {
  int n = 0, N = 0, d = 0;
  Matrix q_rows;                             // n x N, orthonormal rows
  std::vector<std::vector<double>> lambdas;  // d arrays of length N
  std::vector<SymMatrix> extended;           // d matrices N x N
  double objective = 0.0;                    // S value (or commutator norm squared, flow route)
  double compat_penalty = 0.0;
  double commutator_residual = 0.0;  // sqrt(sum over pairs of ||[Ai~,Aj~]||_F^2)
  double extension_error = 0.0;      // sqrt(sum of ||topleft(Ai~) - Ai||_F^2)
  std::uint64_t seed = 0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> s_history;  // S + penalty after each sweep (or sampled iterations)
};

struct BoundReport {
  int n = 0, d = 0;
  int max_commutator_rank = 0;
  int rank_bound = 0;                      // rigorous
  int param_bound = 0;                     // heuristic parameter count
  std::optional<int> structured_bound;     // heuristic, needs block sizes
  std::optional<int> dof_bound_2d;         // heuristic, d = 2 only
};

std::vector<Matrix> circulant_extension(const std::vector<Matrix>& mats);

BoundReport bound_report(const std::vector<SymMatrix>& mats,
                         const std::vector<int>* block_sizes = nullptr);

/// Conjugates the added rows/columns by the (N-n) x (N-n) orthogonal U.
/// Leaves the top-left blocks and the joint spectrum unchanged.
ExtensionCandidate conjugate_family(const ExtensionCandidate& c, const Matrix& u);

/// The diagonal arrays minimizing S at fixed Q: ((Q^T Q) entrywise squared)
/// lambda_i = diag(Q^T A_i Q).
std::vector<std::vector<double>> solve_lambda(const Matrix& q_rows,
                                              const std::vector<SymMatrix>& mats);

struct SObjective {
  double s = 0.0;
  double penalty = 0.0;
};

/// S = 1/2 sum_i ||A_i - Q Lambda_i Q^T||_F^2 plus, when zero_block is
/// given, the summed squares of the forbidden block entries of
/// Qt Lambda_i Qt^T (deterministic completion; the value does not depend on
/// the completion choice).
SObjective s_objective(const Matrix& q_rows, const std::vector<std::vector<double>>& lambdas,
                       const std::vector<SymMatrix>& mats,
                       const ZeroBlockSpec* zero_block = nullptr);

struct MinimizeOpts {
  int max_sweeps = 500;
  std::uint64_t seed = 0;
  double s_tol = -1.0;  // < 0: 1e-12 * sum ||A_i||_F^2
  int multistarts = 8;
};

/// Jacobi-sweep minimization of S + penalty over orthogonal Qt, skipping
/// rotations that only mix the added rows. Multistart; best result by
/// S + penalty, ties by start index. Non-convergence is a status, not an
/// error.
ExtensionCandidate minimize_s(const std::vector<SymMatrix>& mats, int target_size,
                              const ZeroBlockSpec* zero_block, const MinimizeOpts& opts);

struct FlowOpts {
  double step = 1e-2;
  long max_iters = 200000;
  std::uint64_t seed = 0;
  double residual_tol = -1.0;  // < 0: 1e-13 * sum ||A_i||_F (commutator norm target)
  int multistarts = 8;
  double init_sigma = 0.5;
  // optional warm start: added blocks taken from this candidate's extended
  // matrices seed the first start (rows violating the zero block are
  // projected out); remaining starts stay random
  const ExtensionCandidate* warm_start = nullptr;
};

/// Objective ||[X, Y]||_F^2 over the free entries of the added blocks of
/// two structured extensions, with its analytic gradient. Exposed so the
/// gradient can be checked against finite differences.
class CommutatorObjective {
 public:
  CommutatorObjective(const SymMatrix& a1, const SymMatrix& a2, int target_size,
                      const ZeroBlockSpec* zero_block);

  int num_vars() const { return num_vars_; }
  // the two extensions at v
  std::pair<Matrix, Matrix> assemble(const std::vector<double>& v) const;
  double value(const std::vector<double>& v) const;
  std::vector<double> gradient(const std::vector<double>& v) const;

 private:
  Matrix a1_, a2_;
  int n_ = 0, N_ = 0, zero_rows_ = 0, num_vars_ = 0;
};

/// Explicit Euler descent on ||[X, Y]||_F^2 with adaptive step (halve on
/// increase, grow on accept). Exactly two input matrices.
ExtensionCandidate gradient_flow(const std::vector<SymMatrix>& mats, int target_size,
                                 const ZeroBlockSpec* zero_block, const FlowOpts& opts);

/// Frobenius norms of the four block conditions that the added blocks of a
/// tridiagonal-block extension pair must satisfy, for each i >= 2.
struct StructuredResidual {
  double top_coupling = 0.0;     // a_{1(r-1)} a_i - a_{i(r-1)} a_1
  double corner_block = 0.0;     // antisymmetric n_r x n_r condition
  double mixed_block = 0.0;      // alpha_{1r} a_i - alpha_{ir} a_1 + a_1 alpha_i - a_i alpha_1
  double added_corner = 0.0;     // a_1^T a_i - a_i^T a_1 + [alpha_1, alpha_i]
};

std::vector<StructuredResidual> structured_residual(const ExtensionCandidate& c,
                                                    const std::vector<int>& block_sizes);

struct ExtendabilityResult {
  bool dependent = false;
  Matrix kernel;        // n? x k basis of the dependency kernel (6 x k)
  Matrix six_vectors;   // n x 6: [v w A1v A1w A2v A2w]
  std::vector<double> v, w;
};

/// Necessary condition for an (n+1)-extension when rank([A1,A2]) = 2:
/// v, w, A1 v, A1 w, A2 v, A2 w must be linearly dependent, where
/// v w^T - w v^T = -[A1, A2].
ExtendabilityResult extendability_test(const SymMatrix& a1, const SymMatrix& a2);

/// True iff the spectrum hull of the extension contains the spectrum of the
/// original block (min eig(At) <= min eig(A) + 1e-10 and max eig(At) >=
/// max eig(A) - 1e-10). Requires the top-left block of At to equal A.
bool spectral_containment(const SymMatrix& a, const SymMatrix& atilde);

}  // namespace commext
