#include "commext/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "commext/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace commext {

namespace {

int ceil_div(long long num, long long den) {
  return static_cast<int>((num + den - 1) / den);
}

double sum_norm_sq(const std::vector<SymMatrix>& mats) {
  double s = 0.0;
  for (const auto& m : mats) {
    const double f = frobenius_norm(m.matrix());
    s += f * f;
  }
  return s;
}

Matrix block(const Matrix& m, int r0, int r1, int c0, int c1) {
  Matrix out(r1 - r0, c1 - c0);
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) out(i - r0, j - c0) = m(i, j);
  return out;
}

void orthonormalize_rows(Matrix& m) {
  const int rows = m.rows(), cols = m.cols();
  for (int i = 0; i < rows; ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (int b = 0; b < i; ++b) {
        double dot = 0.0;
        for (int j = 0; j < cols; ++j) dot += m(i, j) * m(b, j);
        for (int j = 0; j < cols; ++j) m(i, j) -= dot * m(b, j);
      }
    double norm = 0.0;
    for (int j = 0; j < cols; ++j) norm += m(i, j) * m(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-8) throw std::runtime_error("orthonormalize_rows: degenerate row");
    for (int j = 0; j < cols; ++j) m(i, j) /= norm;
  }
}

// log of the orthogonal matrix I + e, valid for |e|_F <= 0.5; returns the
// antisymmetric generator
Matrix log_near_identity(const Matrix& e) {
  const int n = e.rows();
  Matrix p = e, k = e;
  double sign = -1.0;
  for (int m = 2; m <= 48; ++m) {
    p = p * e;
    const double c = sign / m;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) k(i, j) += c * p(i, j);
    if (max_abs(p) / m < 1e-17) break;
    sign = -sign;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double a = 0.5 * (k(i, j) - k(j, i));
      k(i, j) = a;
      k(j, i) = -a;
    }
  return k;
}

// exp(w k) for antisymmetric k via scaling and squaring with a Taylor core
Matrix exp_skew(const Matrix& k, double w) {
  const int n = k.rows();
  double amount = std::fabs(w) * frobenius_norm(k);
  int squarings = 0;
  while (amount > 0.25 && squarings < 60) {
    amount *= 0.5;
    ++squarings;
  }
  const double scale = w / std::ldexp(1.0, squarings);
  Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = scale * k(i, j);
  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int m = 1; m <= 24; ++m) {
    term = term * b;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) term(i, j) /= m;
    result += term;
    if (max_abs(term) < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

double mat_dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * b(i, j);
  return s;
}

// orthonormal rows from a seeded Gaussian matrix; rejects near-degenerate
// draws (probability ~0)
Matrix random_orthogonal(int n, Rng& rng) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    Matrix m = rng.gaussian_matrix(n, n);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      for (int pass = 0; pass < 2; ++pass)
        for (int b = 0; b < i; ++b) {
          double dot = 0.0;
          for (int j = 0; j < n; ++j) dot += m(i, j) * m(b, j);
          for (int j = 0; j < n; ++j) m(i, j) -= dot * m(b, j);
        }
      double norm = 0.0;
      for (int j = 0; j < n; ++j) norm += m(i, j) * m(i, j);
      norm = std::sqrt(norm);
      if (norm < 1e-6) {
        ok = false;
        break;
      }
      for (int j = 0; j < n; ++j) m(i, j) /= norm;
    }
    if (ok) return m;
  }
  throw std::runtime_error("random_orthogonal: repeated degenerate draws");
}

}  // namespace

std::vector<Matrix> circulant_extension(const std::vector<Matrix>& mats) {
  const int d = static_cast<int>(mats.size());
  if (d == 0) throw std::invalid_argument("circulant_extension: empty family");
  const int n = mats[0].rows();
  for (const auto& m : mats)
    if (m.rows() != n || m.cols() != n)
      throw std::invalid_argument("circulant_extension: inputs must be square and same size");

  std::vector<Matrix> out;
  out.reserve(d);
  for (int i = 0; i < d; ++i) {
    Matrix big(d * n, d * n);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const Matrix& src = mats[((i + k - j) % d + d) % d];
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) big(j * n + a, k * n + b) = src(a, b);
      }
    out.push_back(std::move(big));
  }
  return out;
}

BoundReport bound_report(const std::vector<SymMatrix>& mats, const std::vector<int>* block_sizes) {
  if (mats.empty()) throw std::invalid_argument("bound_report: empty family");
  BoundReport rep;
  rep.d = static_cast<int>(mats.size());
  rep.n = mats[0].dim();
  const int n = rep.n, d = rep.d;

  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      rep.max_commutator_rank = std::max(
          rep.max_commutator_rank, numerical_rank(commutator(mats[i].matrix(), mats[j].matrix())));

  rep.rank_bound = n + ceil_div(rep.max_commutator_rank, 2);
  rep.param_bound = n + (d > 1 ? ceil_div(static_cast<long long>(n) * (n - 1) * (d - 1), 2LL * (n + d)) : 0);

  if (block_sizes && block_sizes->size() >= 2 && d > 1) {
    const int nr = block_sizes->back();
    const int nr1 = (*block_sizes)[block_sizes->size() - 2];
    const long long den = 2LL * (nr + d - (d - 1) * nr1);
    if (den > 0)
      rep.structured_bound = n + ceil_div(static_cast<long long>(d - 1) * nr * (nr - 1), den);
  }
  if (d == 2 && block_sizes) {
    const int q = static_cast<int>(block_sizes->size()) - 1;
    rep.dof_bound_2d = ceil_div(static_cast<long long>(2 * q + 2) * (2 * q + 3), 6);
  }
  return rep;
}

ExtensionCandidate conjugate_family(const ExtensionCandidate& c, const Matrix& u) {
  const int p = c.N - c.n;
  if (u.rows() != p || u.cols() != p)
    throw std::invalid_argument("conjugate_family: U has wrong size");
  if (orthogonality_residual(u) > 1e-10)
    throw std::invalid_argument("conjugate_family: U not orthogonal");

  Matrix big = Matrix::identity(c.N);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) big(c.n + i, c.n + j) = u(i, j);

  ExtensionCandidate out = c;
  out.extended.clear();
  for (const auto& m : c.extended)
    out.extended.emplace_back(big * m.matrix() * transpose(big));

  double comm_sq = 0.0;
  for (std::size_t i = 0; i < out.extended.size(); ++i)
    for (std::size_t j = i + 1; j < out.extended.size(); ++j) {
      const double f =
          frobenius_norm(commutator(out.extended[i].matrix(), out.extended[j].matrix()));
      comm_sq += f * f;
    }
  out.commutator_residual = std::sqrt(comm_sq);
  return out;
}

std::vector<std::vector<double>> solve_lambda(const Matrix& q_rows,
                                              const std::vector<SymMatrix>& mats) {
  const int n = q_rows.rows(), N = q_rows.cols();
  const int d = static_cast<int>(mats.size());
  if (d == 0) throw std::invalid_argument("solve_lambda: empty family");
  for (const auto& m : mats)
    if (m.dim() != n) throw std::invalid_argument("solve_lambda: dimension mismatch");

  Matrix g(N, N);
  for (int al = 0; al < N; ++al)
    for (int be = al; be < N; ++be) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += q_rows(a, al) * q_rows(a, be);
      g(al, be) = g(be, al) = s;
    }
  Matrix m2(N, N);
  for (int al = 0; al < N; ++al)
    for (int be = 0; be < N; ++be) m2(al, be) = g(al, be) * g(al, be);

  std::vector<std::vector<double>> lambdas;
  try {
    LuSolver lu(m2, 1e-12);
    for (int i = 0; i < d; ++i) {
      const Matrix t = mats[i].matrix() * q_rows;  // n x N
      std::vector<double> rhs(N, 0.0);
      for (int be = 0; be < N; ++be) {
        double s = 0.0;
        for (int a = 0; a < n; ++a) s += q_rows(a, be) * t(a, be);
        rhs[be] = s;
      }
      lambdas.push_back(lu.solve(std::move(rhs)));
    }
  } catch (const std::runtime_error&) {
    throw std::runtime_error("solve_lambda: lambda system singular");
  }
  return lambdas;
}

SObjective s_objective(const Matrix& q_rows, const std::vector<std::vector<double>>& lambdas,
                       const std::vector<SymMatrix>& mats, const ZeroBlockSpec* zero_block) {
  const int n = q_rows.rows(), N = q_rows.cols();
  const int d = static_cast<int>(mats.size());
  if (static_cast<int>(lambdas.size()) != d)
    throw std::invalid_argument("s_objective: lambda count mismatch");

  SObjective out;
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(lambdas[i].size()) != N)
      throw std::invalid_argument("s_objective: lambda length mismatch");
    Matrix rec(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        double s = 0.0;
        for (int al = 0; al < N; ++al) s += q_rows(a, al) * lambdas[i][al] * q_rows(b, al);
        rec(a, b) = rec(b, a) = s;
      }
    const double f = frobenius_norm(mats[i].matrix() - rec);
    out.s += 0.5 * f * f;
  }

  if (zero_block && zero_block->rows > 0 && N > n) {
    const Matrix qt = complete_orthonormal(OrthonormalRows(q_rows));
    const int m = zero_block->rows;
    for (int i = 0; i < d; ++i)
      for (int a = 0; a < m; ++a)
        for (int b = n; b < N; ++b) {
          double s = 0.0;
          for (int al = 0; al < N; ++al) s += qt(a, al) * lambdas[i][al] * qt(b, al);
          out.penalty += s * s;
        }
  }
  return out;
}

namespace {

// Jacobi-sweep minimization state for one start. Caches:
//   t[i]    = A_i * Q        (n x N, Q = top n rows of qt)
//   rhs0[i] = diag(Q^T A_i Q)
//   g       = Q^T Q, m2 = g entrywise squared, lu = LU(m2)
// Rotations mixing two top rows leave g (hence lu) unchanged; rotations
// mixing a top row with an added row change g by rank two and pay for a
// fresh LU at every angle probe.
class SMinimizer {
 public:
  SMinimizer(const std::vector<SymMatrix>& mats, int target_size, const ZeroBlockSpec* zero_block,
             std::uint64_t seed)
      : mats_(mats),
        n_(mats[0].dim()),
        N_(target_size),
        d_(static_cast<int>(mats.size())),
        zero_rows_(zero_block ? zero_block->rows : 0),
        rng_(seed) {
    scale_ = sum_norm_sq(mats_);
    accept_eps_ = 1e-18 * scale_;
    norms_sq_.resize(d_);
    for (int i = 0; i < d_; ++i) {
      const double f = frobenius_norm(mats_[i].matrix());
      norms_sq_[i] = f * f;
    }
    qp_new_.resize(N_);
    qr_new_.resize(N_);
    wp_.resize(N_);
    wr_.resize(N_);
    g2_scratch_ = Matrix(N_, N_);
    qt_ = random_orthogonal(N_, rng_);
    refresh();
  }

  double scale() const { return scale_; }
  const Matrix& qt() const { return qt_; }

  // full recomputation of all caches and the current objective
  void refresh() {
    t_.assign(d_, Matrix(n_, N_));
    rhs0_.assign(d_, std::vector<double>(N_, 0.0));
    for (int i = 0; i < d_; ++i) {
      const Matrix& a = mats_[i].matrix();
      for (int row = 0; row < n_; ++row)
        for (int be = 0; be < N_; ++be) {
          double s = 0.0;
          for (int k = 0; k < n_; ++k) s += a(row, k) * qt_(k, be);
          t_[i](row, be) = s;
        }
      for (int be = 0; be < N_; ++be) {
        double s = 0.0;
        for (int a2 = 0; a2 < n_; ++a2) s += qt_(a2, be) * t_[i](a2, be);
        rhs0_[i][be] = s;
      }
    }
    g_ = Matrix(N_, N_);
    for (int al = 0; al < N_; ++al)
      for (int be = al; be < N_; ++be) {
        double s = 0.0;
        for (int a = 0; a < n_; ++a) s += qt_(a, al) * qt_(a, be);
        g_(al, be) = g_(be, al) = s;
      }
    rebuild_lu();
    current_ = evaluate_at(-1, -1, 0.0);
  }

  double current() const { return current_; }

  // one full sweep over admissible pairs; returns number of accepted
  // rotations
  int sweep() {
    int accepted = 0;
    const double eps = accept_eps_;
    for (int p = 0; p < n_; ++p)
      for (int r = p + 1; r < N_; ++r) {
        auto f = [&](double theta) { return evaluate_at(p, r, theta); };
        const double theta = rotation_angle_minimize(f);
        if (theta == 0.0) continue;
        const double val = evaluate_at(p, r, theta);
        if (val < current_ - eps) {
          apply(p, r, theta);
          current_ = val;
          ++accepted;
        }
      }
    return accepted;
  }

  // minimum decrease a rotation must deliver to be accepted; the driver
  // escalates it when rounding noise lets a sweep regress
  void set_accept_eps(double eps) { accept_eps_ = eps; }
  double accept_eps() const { return accept_eps_; }

  void restore(const Matrix& qt) {
    qt_ = qt;
    trail_.clear();
    refresh();
  }

  // Accelerates the slow linear phases: the net rotation of the last sweep
  // is raised to increasing powers along the one-parameter subgroup
  // exp(w log R), and the jump is kept only when it lowers the objective.
  // Cyclic angle sweeps contract along one dominant slow mode in both
  // plateau and terminal regimes, so powers of the sweep displacement
  // land far ahead on the same path.
  bool extrapolate(const Matrix& qt_before) {
    Matrix e = qt_ * transpose(qt_before);
    for (int i = 0; i < N_; ++i) e(i, i) -= 1.0;
    const double enorm = frobenius_norm(e);
    if (enorm < 1e-14 || enorm > 0.5) return false;

    Matrix k = log_near_identity(e);
    const double knorm = frobenius_norm(k);
    if (!(knorm > 0.0)) return false;

    const double eps = accept_eps_;
    Matrix qt_best = qt_;
    double val_best = current_;
    bool improved = false;
    for (double w = 4.0; w * knorm <= 40.0; w *= 4.0) {
      Matrix qt_try = exp_skew(k, w) * qt_before;
      orthonormalize_rows(qt_try);
      qt_ = qt_try;
      refresh();
      if (current_ < val_best - eps) {
        val_best = current_;
        qt_best = qt_;
        improved = true;
      } else {
        break;
      }
    }
    qt_ = qt_best;
    refresh();
    return improved;
  }

  // Anderson-style extrapolation over the trail of recent post-sweep
  // frames. The least-squares combination of consecutive displacements
  // cancels several slow modes at once, including complex pairs that the
  // single-direction power ladder cannot reach.
  bool anderson() {
    trail_.push_back(qt_);
    if (trail_.size() > 6) trail_.erase(trail_.begin());
    if (trail_.size() < 4) return false;
    const int m = static_cast<int>(trail_.size()) - 1;
    const Matrix ref = trail_.back();

    std::vector<Matrix> x;
    x.reserve(m + 1);
    for (const Matrix& f : trail_) {
      Matrix e = f * transpose(ref);
      for (int i = 0; i < N_; ++i) e(i, i) -= 1.0;
      if (frobenius_norm(e) > 0.5) {
        trail_.assign(1, qt_);
        return false;
      }
      x.push_back(log_near_identity(e));
    }
    std::vector<Matrix> r;
    r.reserve(m);
    for (int j = 0; j < m; ++j) r.push_back(x[j + 1] - x[j]);
    if (frobenius_norm(r.back()) < 1e-15) return false;

    // min over gamma of |r_last + sum_j gamma_j (r_j - r_last)|
    const int mu = m - 1;
    std::vector<Matrix> u;
    u.reserve(mu);
    for (int j = 0; j < mu; ++j) u.push_back(r[j] - r[m - 1]);
    Matrix g(mu, mu);
    std::vector<double> rhs(mu, 0.0);
    double tr = 0.0;
    for (int a2 = 0; a2 < mu; ++a2) {
      for (int b2 = a2; b2 < mu; ++b2) {
        const double v = mat_dot(u[a2], u[b2]);
        g(a2, b2) = g(b2, a2) = v;
      }
      rhs[a2] = -mat_dot(u[a2], r[m - 1]);
      tr += g(a2, a2);
    }
    const double reg = 1e-12 * std::max(1.0, tr / mu);
    for (int a2 = 0; a2 < mu; ++a2) g(a2, a2) += reg;
    std::vector<double> gamma;
    try {
      LuSolver lu(g);
      gamma = lu.solve(rhs);
    } catch (const std::runtime_error&) {
      return false;
    }
    std::vector<double> c(m, 0.0);
    double csum = 0.0;
    for (int j = 0; j < mu; ++j) {
      c[j] = gamma[j];
      csum += gamma[j];
    }
    c[m - 1] = 1.0 - csum;

    Matrix xacc(N_, N_);
    for (int j = 0; j < m; ++j) {
      if (c[j] == 0.0) continue;
      for (int a2 = 0; a2 < N_; ++a2)
        for (int b2 = 0; b2 < N_; ++b2) xacc(a2, b2) += c[j] * x[j + 1](a2, b2);
    }
    const double xnorm = frobenius_norm(xacc);
    if (!(xnorm > 0.0) || xnorm > 10.0) return false;

    const double eps = accept_eps_;
    Matrix qt_best = qt_;
    double val_best = current_;
    bool improved = false;
    for (double w = 1.0; w * xnorm <= 40.0; w *= 2.0) {
      Matrix qt_try = exp_skew(xacc, w) * ref;
      orthonormalize_rows(qt_try);
      qt_ = qt_try;
      refresh();
      if (current_ < val_best - eps) {
        val_best = current_;
        qt_best = qt_;
        improved = true;
      } else {
        break;
      }
    }
    qt_ = qt_best;
    refresh();
    if (improved) trail_.assign(1, qt_);
    return improved;
  }

  // objective S + penalty with rows p and r rotated by theta (p = -1 probes
  // the current state)
  double evaluate_at(int p, int r, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const bool probe = p >= 0 && theta != 0.0;
    bool top_pair = true;
    if (probe) {
      top_pair = r < n_;
      for (int j = 0; j < N_; ++j) {
        qp_new_[j] = c * qt_(p, j) - s * qt_(r, j);
        qr_new_[j] = s * qt_(p, j) + c * qt_(r, j);
        wp_[j] = qp_new_[j] - qt_(p, j);
        wr_[j] = qr_new_[j] - qt_(r, j);
      }
    }

    // lambda system matrix: unchanged for top pairs, rank-two update for
    // mixed pairs
    const LuSolver* lu = lu_ ? &*lu_ : nullptr;
    std::optional<LuSolver> lu_local;
    if (probe && !top_pair) {
      g2_scratch_ = g_;
      for (int al = 0; al < N_; ++al) {
        double* row = g2_scratch_.row_ptr(al);
        const double qpa = qt_(p, al);
        for (int be = 0; be < N_; ++be) {
          const double v = row[be] + qp_new_[al] * qp_new_[be] - qpa * qt_(p, be);
          row[be] = v * v;
        }
      }
      try {
        lu_local.emplace(std::move(g2_scratch_), 1e-12);
      } catch (const std::runtime_error&) {
        g2_scratch_ = Matrix(N_, N_);
        return std::numeric_limits<double>::infinity();
      }
      g2_scratch_ = Matrix(N_, N_);
      lu = &*lu_local;
    }
    if (!lu) return std::numeric_limits<double>::infinity();

    double total = 0.0;
    auto row_at = [&](int idx) -> const double* {
      if (probe && idx == p) return qp_new_.data();
      if (probe && idx == r) return qr_new_.data();
      return qt_.row_ptr(idx);
    };
    for (int i = 0; i < d_; ++i) {
      const Matrix& a = mats_[i].matrix();
      rhs_scratch_ = rhs0_[i];
      if (probe) {
        const double app = a(p, p);
        const double* tp = t_[i].row_ptr(p);
        if (top_pair) {
          const double apr = a(p, r), arr = a(r, r);
          const double* tr = t_[i].row_ptr(r);
          for (int be = 0; be < N_; ++be)
            rhs_scratch_[be] += 2.0 * wp_[be] * tp[be] + 2.0 * wr_[be] * tr[be] +
                                app * wp_[be] * wp_[be] + 2.0 * apr * wp_[be] * wr_[be] +
                                arr * wr_[be] * wr_[be];
        } else {
          for (int be = 0; be < N_; ++be)
            rhs_scratch_[be] += 2.0 * wp_[be] * tp[be] + app * wp_[be] * wp_[be];
        }
      }
      try {
        lu->solve(rhs_scratch_, lam_scratch_);
      } catch (const std::runtime_error&) {
        return std::numeric_limits<double>::infinity();
      }
      double lr = 0.0;
      for (int be = 0; be < N_; ++be) lr += lam_scratch_[be] * rhs_scratch_[be];
      total += 0.5 * (norms_sq_[i] - lr);

      if (zero_rows_ > 0 && N_ > n_) {
        for (int a2 = 0; a2 < zero_rows_; ++a2) {
          const double* ra = row_at(a2);
          for (int b = n_; b < N_; ++b) {
            const double* rb = row_at(b);
            double s2 = 0.0;
            for (int be = 0; be < N_; ++be) s2 += ra[be] * lam_scratch_[be] * rb[be];
            total += s2 * s2;
          }
        }
      }
    }
    return total;
  }

  void apply(int p, int r, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    for (int j = 0; j < N_; ++j) {
      const double qp = qt_(p, j), qr = qt_(r, j);
      qp_new_[j] = c * qp - s * qr;
      qr_new_[j] = s * qp + c * qr;
      wp_[j] = qp_new_[j] - qp;
      wr_[j] = qr_new_[j] - qr;
    }
    const bool top_pair = r < n_;
    for (int i = 0; i < d_; ++i) {
      const Matrix& a = mats_[i].matrix();
      for (int row = 0; row < n_; ++row) {
        const double fp = a(row, p);
        const double fr = top_pair ? a(row, r) : 0.0;
        if (fp == 0.0 && fr == 0.0) continue;
        double* ti = t_[i].row_ptr(row);
        for (int be = 0; be < N_; ++be) ti[be] += fp * wp_[be] + fr * wr_[be];
      }
    }
    for (int j = 0; j < N_; ++j) {
      qt_(p, j) = qp_new_[j];
      qt_(r, j) = qr_new_[j];
    }
    for (int i = 0; i < d_; ++i)
      for (int be = 0; be < N_; ++be) {
        double s2 = 0.0;
        for (int a2 = 0; a2 < n_; ++a2) s2 += qt_(a2, be) * t_[i](a2, be);
        rhs0_[i][be] = s2;
      }
    if (!top_pair) {
      for (int al = 0; al < N_; ++al)
        for (int be = al; be < N_; ++be) {
          double s2 = 0.0;
          for (int a = 0; a < n_; ++a) s2 += qt_(a, al) * qt_(a, be);
          g_(al, be) = g_(be, al) = s2;
        }
      rebuild_lu();
    }
  }

  // random rotation escape when the lambda system goes singular
  void perturb() {
    const int p = static_cast<int>(rng_.uniform() * n_) % n_;
    int r = p;
    while (r == p) r = static_cast<int>(rng_.uniform() * N_) % N_;
    apply(std::min(p, r), std::max(p, r), 0.05 * (rng_.uniform() - 0.5));
    trail_.clear();
    refresh();
  }

  bool lu_ok() const { return lu_.has_value(); }

 private:
  void rebuild_lu() {
    Matrix m2(N_, N_);
    for (int al = 0; al < N_; ++al)
      for (int be = 0; be < N_; ++be) m2(al, be) = g_(al, be) * g_(al, be);
    try {
      lu_.emplace(std::move(m2), 1e-12);
    } catch (const std::runtime_error&) {
      lu_.reset();
    }
  }

  const std::vector<SymMatrix>& mats_;
  int n_, N_, d_, zero_rows_;
  Rng rng_;
  double scale_ = 0.0;
  double current_ = 0.0;
  double accept_eps_ = 0.0;
  std::vector<double> norms_sq_;
  Matrix qt_, g_, g2_scratch_;
  std::vector<Matrix> t_;
  std::vector<Matrix> trail_;
  std::vector<std::vector<double>> rhs0_;
  std::vector<double> qp_new_, qr_new_, wp_, wr_, rhs_scratch_, lam_scratch_;
  std::optional<LuSolver> lu_;
};

struct StartResult {
  Matrix qt;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
  int sweeps = 0;
  std::uint64_t seed = 0;
  std::vector<double> history;
};

StartResult run_minimize_start(const std::vector<SymMatrix>& mats, int target_size,
                               const ZeroBlockSpec* zero_block, std::uint64_t seed,
                               const MinimizeOpts& opts, double s_tol) {
  StartResult res;
  res.seed = seed;
  SMinimizer mini(mats, target_size, zero_block, seed);
  for (int attempts = 0; !mini.lu_ok() && attempts < 4; ++attempts) mini.perturb();
  if (!mini.lu_ok()) return res;

  for (int k = 0; k < opts.max_sweeps; ++k) {
    // Rotation acceptance starts at noise level; if rounding lets a sweep
    // regress on the recomputed objective, the sweep is reverted and
    // retried with a stricter acceptance margin, so the recorded history
    // never increases.
    const Matrix checkpoint = mini.qt();
    const double prev = mini.current();
    int accepted = 0;
    bool jumped = false;
    for (int attempt = 0; attempt < 4; ++attempt) {
      accepted = mini.sweep();
      jumped = mini.anderson();
      if (!jumped) jumped = mini.extrapolate(checkpoint);
      if (!jumped) mini.refresh();  // resync caches; guards against incremental drift
      if (mini.current() <= prev) break;
      mini.restore(checkpoint);
      mini.set_accept_eps(mini.accept_eps() * 100.0);
      accepted = 0;
    }
    res.history.push_back(std::min(mini.current(), prev));
    res.sweeps = k + 1;
    if (mini.current() <= s_tol) {
      res.converged = true;
      break;
    }
    if (accepted == 0 && !jumped) break;
    if (!mini.lu_ok()) {
      mini.perturb();
      if (!mini.lu_ok()) break;
    }
  }
  res.value = mini.current();
  res.qt = mini.qt();
  return res;
}

ExtensionCandidate candidate_from_qt(const Matrix& qt, const std::vector<SymMatrix>& mats,
                                     const ZeroBlockSpec* zero_block) {
  const int N = qt.rows();
  const int n = mats[0].dim();
  const int d = static_cast<int>(mats.size());

  ExtensionCandidate c;
  c.n = n;
  c.N = N;
  c.d = d;
  c.q_rows = block(qt, 0, n, 0, N);
  c.lambdas = solve_lambda(c.q_rows, mats);

  for (int i = 0; i < d; ++i) {
    Matrix big(N, N);
    for (int a = 0; a < N; ++a)
      for (int b = a; b < N; ++b) {
        double s = 0.0;
        for (int al = 0; al < N; ++al) s += qt(a, al) * c.lambdas[i][al] * qt(b, al);
        big(a, b) = big(b, a) = s;
      }
    c.extended.emplace_back(std::move(big));
  }

  const SObjective obj = s_objective(c.q_rows, c.lambdas, mats, zero_block);
  c.objective = obj.s;
  c.compat_penalty = obj.penalty;

  double comm_sq = 0.0, ext_sq = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double f = frobenius_norm(commutator(c.extended[i].matrix(), c.extended[j].matrix()));
      comm_sq += f * f;
    }
    const Matrix top = block(c.extended[i].matrix(), 0, n, 0, n);
    const double e = frobenius_norm(top - mats[i].matrix());
    ext_sq += e * e;
  }
  c.commutator_residual = std::sqrt(comm_sq);
  c.extension_error = std::sqrt(ext_sq);
  return c;
}

}  // namespace

ExtensionCandidate minimize_s(const std::vector<SymMatrix>& mats, int target_size,
                              const ZeroBlockSpec* zero_block, const MinimizeOpts& opts) {
  if (mats.empty()) throw std::invalid_argument("minimize_s: empty family");
  const int n = mats[0].dim();
  if (target_size < n) throw std::invalid_argument("minimize_s: target size below input size");
  for (const auto& m : mats)
    if (m.dim() != n) throw std::invalid_argument("minimize_s: dimension mismatch");

  const double scale = sum_norm_sq(mats);
  const double s_tol = opts.s_tol > 0.0 ? opts.s_tol : 1e-12 * scale;
  const int starts = std::max(1, opts.multistarts);

  std::vector<StartResult> results(starts);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int k = 0; k < starts; ++k)
    results[k] =
        run_minimize_start(mats, target_size, zero_block, Rng::derive(opts.seed, k), opts, s_tol);

  int best = 0;
  for (int k = 1; k < starts; ++k) {
    const bool better = (results[k].converged && !results[best].converged) ||
                        (results[k].converged == results[best].converged &&
                         results[k].value < results[best].value);
    if (better) best = k;
  }
  const StartResult& win = results[best];
  if (win.qt.rows() == 0) throw std::runtime_error("minimize_s: all starts failed to initialize");

  ExtensionCandidate c = candidate_from_qt(win.qt, mats, zero_block);
  c.seed = win.seed;
  c.sweeps = win.sweeps;
  c.converged = win.converged;
  c.s_history = win.history;
  return c;
}

CommutatorObjective::CommutatorObjective(const SymMatrix& a1, const SymMatrix& a2, int target_size,
                                         const ZeroBlockSpec* zero_block)
    : a1_(a1.matrix()), a2_(a2.matrix()), n_(a1.dim()), N_(target_size) {
  if (a2.dim() != n_) throw std::invalid_argument("CommutatorObjective: dimension mismatch");
  if (N_ < n_) throw std::invalid_argument("CommutatorObjective: target size below input size");
  zero_rows_ = zero_block ? zero_block->rows : 0;
  if (zero_rows_ < 0 || zero_rows_ > n_)
    throw std::invalid_argument("CommutatorObjective: bad zero block");
  const int p = N_ - n_;
  num_vars_ = 2 * ((n_ - zero_rows_) * p + p * (p + 1) / 2);
}

std::pair<Matrix, Matrix> CommutatorObjective::assemble(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != num_vars_)
    throw std::invalid_argument("CommutatorObjective: wrong variable count");
  const int p = N_ - n_;
  auto build = [&](const Matrix& a, int offset) {
    Matrix x(N_, N_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) x(i, j) = a(i, j);
    int idx = offset;
    for (int i = zero_rows_; i < n_; ++i)
      for (int j = 0; j < p; ++j) {
        x(i, n_ + j) = v[idx];
        x(n_ + j, i) = v[idx];
        ++idx;
      }
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j) {
        x(n_ + i, n_ + j) = v[idx];
        x(n_ + j, n_ + i) = v[idx];
        ++idx;
      }
    return x;
  };
  const int half = num_vars_ / 2;
  return {build(a1_, 0), build(a2_, half)};
}

double CommutatorObjective::value(const std::vector<double>& v) const {
  auto [x, y] = assemble(v);
  const double f = frobenius_norm(commutator(x, y));
  return f * f;
}

std::vector<double> CommutatorObjective::gradient(const std::vector<double>& v) const {
  auto [x, y] = assemble(v);
  const Matrix c = commutator(x, y);
  const Matrix gx = 2.0 * (c * y - y * c);
  const Matrix gy = 2.0 * (x * c - c * x);
  const int p = N_ - n_;
  std::vector<double> g(num_vars_);
  auto project = [&](const Matrix& gm, int offset) {
    int idx = offset;
    for (int i = zero_rows_; i < n_; ++i)
      for (int j = 0; j < p; ++j) g[idx++] = 2.0 * gm(i, n_ + j);
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j) g[idx++] = (i == j) ? gm(n_ + i, n_ + i) : 2.0 * gm(n_ + i, n_ + j);
  };
  project(gx, 0);
  project(gy, num_vars_ / 2);
  return g;
}

namespace {

struct FlowResult {
  std::vector<double> v;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
  long iters = 0;
  std::uint64_t seed = 0;
  std::vector<double> history;
};

FlowResult run_flow_start(const CommutatorObjective& obj, std::uint64_t seed, const FlowOpts& opts,
                          double f_tol, const std::vector<double>* init = nullptr) {
  FlowResult res;
  res.seed = seed;
  Rng rng(seed);
  std::vector<double> v(obj.num_vars());
  if (init)
    v = *init;
  else
    for (double& x : v) x = opts.init_sigma * rng.gaussian();

  double f = obj.value(v);
  double h = opts.step;
  res.history.push_back(f);
  for (long it = 0; it < opts.max_iters; ++it) {
    res.iters = it + 1;
    if (f <= f_tol) {
      res.converged = true;
      break;
    }
    const std::vector<double> g = obj.gradient(v);
    std::vector<double> vn(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) vn[j] = v[j] - h * g[j];
    const double fn = obj.value(vn);
    if (fn < f) {
      v.swap(vn);
      f = fn;
      h = std::min(h * 1.2, opts.step * 1e4);
    } else {
      h *= 0.5;
      if (h < opts.step * 1e-16) break;
    }
    if (res.iters % 100 == 0) res.history.push_back(f);
  }
  if (f <= f_tol) res.converged = true;
  res.v = std::move(v);
  res.value = f;
  res.history.push_back(f);
  return res;
}

}  // namespace

ExtensionCandidate gradient_flow(const std::vector<SymMatrix>& mats, int target_size,
                                 const ZeroBlockSpec* zero_block, const FlowOpts& opts) {
  if (mats.size() != 2) throw std::invalid_argument("gradient_flow: exactly two matrices required");
  const int n = mats[0].dim();
  const int N = target_size;

  double norm_sum = 0.0;
  for (const auto& m : mats) norm_sum += frobenius_norm(m.matrix());
  const double rtol = opts.residual_tol > 0.0 ? opts.residual_tol : 1e-13;
  const double target = rtol * norm_sum;
  const double f_tol = target * target;

  CommutatorObjective obj(mats[0], mats[1], N, zero_block);

  // lift the added blocks of a warm-start candidate into the variable vector;
  // entries in forbidden zero-block rows are dropped (projected to zero)
  std::vector<double> warm;
  if (opts.warm_start) {
    const ExtensionCandidate& ws = *opts.warm_start;
    if (ws.n == n && ws.N == N && ws.extended.size() == 2 && ws.extended[0].dim() == N &&
        ws.extended[1].dim() == N) {
      const int zr = zero_block ? zero_block->rows : 0;
      const int p = N - n;
      warm.reserve(obj.num_vars());
      for (const auto& sm : ws.extended) {
        const Matrix& e = sm.matrix();
        for (int i = zr; i < n; ++i)
          for (int j = 0; j < p; ++j) warm.push_back(e(i, n + j));
        for (int i = 0; i < p; ++i)
          for (int j = i; j < p; ++j) warm.push_back(e(n + i, n + j));
      }
    }
  }

  const int starts = std::max(1, opts.multistarts);
  std::vector<FlowResult> results(starts);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int k = 0; k < starts; ++k)
    results[k] = run_flow_start(obj, Rng::derive(opts.seed, k), opts, f_tol,
                                k == 0 && !warm.empty() ? &warm : nullptr);

  int best = 0;
  for (int k = 1; k < starts; ++k)
    if ((results[k].converged && !results[best].converged) ||
        (results[k].converged == results[best].converged && results[k].value < results[best].value))
      best = k;
  const FlowResult& win = results[best];

  auto [x, y] = obj.assemble(win.v);
  ExtensionCandidate c;
  c.n = n;
  c.N = N;
  c.d = 2;
  c.extended.emplace_back(std::move(x));
  c.extended.emplace_back(std::move(y));
  c.objective = win.value;
  c.commutator_residual = std::sqrt(std::max(0.0, win.value));
  c.compat_penalty = 0.0;  // forbidden blocks are structurally zero here
  c.extension_error = 0.0;
  c.seed = win.seed;
  c.sweeps = static_cast<int>(std::min<long>(win.iters, INT32_MAX));
  c.converged = win.converged;
  c.s_history = win.history;

  if (win.converged) {
    // recover the factorized form from the joint eigensystem
    const double commute_tol = std::max(1e-8 * norm_sum, 3.0 * c.commutator_residual);
    JointEigenSystem joint = simultaneous_diagonalize(c.extended, 1e-12, commute_tol);
    c.q_rows = block(joint.vectors, 0, n, 0, N);
    c.lambdas = joint.values;
  }
  return c;
}

std::vector<StructuredResidual> structured_residual(const ExtensionCandidate& c,
                                                    const std::vector<int>& block_sizes) {
  if (block_sizes.size() < 2)
    throw std::invalid_argument("structured_residual: need at least two degree blocks");
  const int n = std::accumulate(block_sizes.begin(), block_sizes.end(), 0);
  if (n != c.n || c.N < c.n || static_cast<int>(c.extended.size()) != c.d)
    throw std::invalid_argument("structured_residual: inconsistent block shapes");

  const int nr = block_sizes.back();
  const int nr1 = block_sizes[block_sizes.size() - 2];
  const int start_r = n - nr;
  const int start_r1 = start_r - nr1;
  const int N = c.N;

  auto a_prev = [&](int i) { return block(c.extended[i].matrix(), start_r1, start_r, start_r, n); };
  auto alpha_r = [&](int i) { return block(c.extended[i].matrix(), start_r, n, start_r, n); };
  auto a_new = [&](int i) { return block(c.extended[i].matrix(), start_r, n, n, N); };
  auto alpha_new = [&](int i) { return block(c.extended[i].matrix(), n, N, n, N); };

  const Matrix ap1 = a_prev(0), ar1 = alpha_r(0), an1 = a_new(0), al1 = alpha_new(0);

  std::vector<StructuredResidual> out;
  for (int i = 1; i < c.d; ++i) {
    const Matrix api = a_prev(i), ari = alpha_r(i), ani = a_new(i), ali = alpha_new(i);
    StructuredResidual r;
    r.top_coupling = frobenius_norm(ap1 * ani - api * an1);
    r.corner_block = frobenius_norm(transpose(ap1) * api - transpose(api) * ap1 + ar1 * ari -
                                    ari * ar1 + an1 * transpose(ani) - ani * transpose(an1));
    r.mixed_block = frobenius_norm(ar1 * ani - ari * an1 + an1 * ali - ani * al1);
    r.added_corner =
        frobenius_norm(transpose(an1) * ani - transpose(ani) * an1 + al1 * ali - ali * al1);
    out.push_back(r);
  }
  return out;
}

ExtendabilityResult extendability_test(const SymMatrix& a1, const SymMatrix& a2) {
  const int n = a1.dim();
  if (a2.dim() != n) throw std::invalid_argument("extendability_test: dimension mismatch");
  const Matrix c = commutator(a1.matrix(), a2.matrix());
  if (numerical_rank(c) != 2)
    throw std::runtime_error("extendability_test: lemma inapplicable (commutator rank != 2)");

  // -C^2 is PSD with a dominant two-dimensional eigenspace spanning Im(C)
  const Matrix b = -1.0 * (c * c);
  EigenDecomposition eig = sym_eigen(SymMatrix(b));
  std::vector<double> u1(n), u2(n);
  for (int i = 0; i < n; ++i) {
    u1[i] = eig.vectors(i, n - 2);
    u2[i] = eig.vectors(i, n - 1);
  }
  const std::vector<double> cu1 = c * u1;
  double gamma = 0.0;
  for (int i = 0; i < n; ++i) gamma += u2[i] * cu1[i];
  if (gamma < 0.0) {
    std::swap(u1, u2);
    gamma = -gamma;
  }
  const double s = std::sqrt(gamma);

  ExtendabilityResult res;
  res.v.resize(n);
  res.w.resize(n);
  for (int i = 0; i < n; ++i) {
    res.v[i] = s * u1[i];
    res.w[i] = s * u2[i];
  }

  Matrix check(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) check(i, j) = res.v[i] * res.w[j] - res.w[i] * res.v[j] + c(i, j);
  if (frobenius_norm(check) > 1e-10 * std::max(1.0, frobenius_norm(c)))
    throw std::runtime_error("extendability_test: commutator factorization failed");

  const std::vector<double> a1v = a1.matrix() * res.v;
  const std::vector<double> a1w = a1.matrix() * res.w;
  const std::vector<double> a2v = a2.matrix() * res.v;
  const std::vector<double> a2w = a2.matrix() * res.w;
  res.six_vectors = Matrix(n, 6);
  for (int i = 0; i < n; ++i) {
    res.six_vectors(i, 0) = res.v[i];
    res.six_vectors(i, 1) = res.w[i];
    res.six_vectors(i, 2) = a1v[i];
    res.six_vectors(i, 3) = a1w[i];
    res.six_vectors(i, 4) = a2v[i];
    res.six_vectors(i, 5) = a2w[i];
  }
  res.dependent = numerical_rank(res.six_vectors) < 6;
  res.kernel = null_space(res.six_vectors);
  return res;
}

bool spectral_containment(const SymMatrix& a, const SymMatrix& atilde) {
  const int n = a.dim(), N = atilde.dim();
  if (N < n) throw std::invalid_argument("spectral_containment: extension smaller than block");
  double diff = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) diff = std::max(diff, std::fabs(atilde(i, j) - a(i, j)));
  if (diff > 1e-8 * std::max(1.0, max_abs(a.matrix())))
    throw std::invalid_argument("spectral_containment: top-left block mismatch");

  EigenDecomposition ea = sym_eigen(a);
  EigenDecomposition et = sym_eigen(atilde);
  return et.values.front() <= ea.values.front() + 1e-10 &&
         et.values.back() >= ea.values.back() - 1e-10;
}

}  // namespace commext
