#include "commext/cubature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "commext/linalg.hpp"
#include "commext/rng.hpp"

namespace commext {

namespace {

constexpr double kPi = 3.14159265358979323846;

double eval_monomial(const MultiIndex& m, const std::vector<double>& x) {
  double p = 1.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (int e = 0; e < m[i]; ++e) p *= x[i];
  return p;
}

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", w);
  return buf;
}

/// Shared tail of rule construction: lexicographic node order on coordinates
/// rounded to 1e-9, positivity check, negligible-weight warnings.
void assemble_rule(CubatureRule& rule, std::vector<std::vector<double>>& nodes,
                   std::vector<double>& weights) {
  const int N = static_cast<int>(nodes.size());
  std::vector<std::vector<long long>> keys(N);
  for (int a = 0; a < N; ++a) {
    keys[a].resize(nodes[a].size());
    for (std::size_t i = 0; i < nodes[a].size(); ++i) keys[a][i] = std::llround(nodes[a][i] * 1e9);
  }
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return a < b;
  });

  double wsum = 0.0;
  for (double w : weights) {
    if (w < -1e-12) throw std::runtime_error("not a positive rule");
    wsum += w;
  }
  const double floor = 1e-12 * wsum;
  rule.nodes.resize(N);
  rule.weights.resize(N);
  for (int a = 0; a < N; ++a) {
    rule.nodes[a] = std::move(nodes[order[a]]);
    rule.weights[a] = weights[order[a]];
    if (rule.weights[a] <= floor)
      rule.warnings.push_back("node " + std::to_string(a) + " carries negligible weight " +
                              format_weight(rule.weights[a]));
  }
}

}  // namespace

CubatureRule rule_from_extension(const ExtensionCandidate& c, const GradedBasis& basis,
                                 const WeightedDomain& domain) {
  const int n = c.n, N = c.N, d = c.d;
  if (static_cast<int>(c.extended.size()) != d || d == 0)
    throw std::invalid_argument("rule_from_extension: candidate carries no extension matrices");
  if (basis.size() != n || basis.d != d || domain.dim() != d)
    throw std::invalid_argument("rule_from_extension: basis/domain does not match candidate");
  for (const auto& m : c.extended)
    if (m.dim() != N) throw std::invalid_argument("rule_from_extension: extension size mismatch");

  double norm_sum = 0.0;
  for (const auto& m : c.extended) norm_sum += frobenius_norm(m.matrix());
  double resid2 = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double r = frobenius_norm(commutator(c.extended[i].matrix(), c.extended[j].matrix()));
      resid2 += r * r;
    }
  double penalty = 0.0;
  const int zr = basis.lower_dim();
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < zr; ++a)
      for (int b = n; b < N; ++b) {
        const double e = c.extended[i](a, b);
        penalty += e * e;
      }
  const double gate = 1e-6 * std::max(1.0, norm_sum);
  if (std::sqrt(penalty) > gate)
    throw std::invalid_argument("rule_from_extension: compatibility violated");
  if (std::sqrt(resid2) > gate)
    throw std::invalid_argument("rule_from_extension: commutation violated");

  const double commute_tol = std::max(1e-8 * norm_sum, 3.0 * std::sqrt(resid2));
  JointEigenSystem joint = simultaneous_diagonalize(c.extended, 1e-12, commute_tol);

  const double e1 = basis.coeffs(0, 0);
  std::vector<std::vector<double>> nodes(N, std::vector<double>(d));
  std::vector<double> weights(N);
  for (int a = 0; a < N; ++a) {
    for (int i = 0; i < d; ++i) nodes[a][i] = joint.values[i][a];
    const double u1 = joint.vectors(0, a) / e1;
    weights[a] = u1 * u1;
  }

  CubatureRule rule;
  rule.d = d;
  rule.degree = 2 * basis.q + 1;
  rule.provenance = "extension_search";
  assemble_rule(rule, nodes, weights);
  return rule;
}

CubatureRule gauss_1d(const WeightedDomain& domain, int q) {
  if (domain.dim() != 1) throw std::invalid_argument("gauss_1d: one-dimensional domain required");
  if (q < 0) throw std::invalid_argument("gauss_1d: q must be nonnegative");
  GradedBasis basis = gram_schmidt_basis(domain, q);
  CoordinateMatrices cm = coordinate_matrices(domain, basis);
  EigenDecomposition eig = sym_eigen(cm.mats[0]);

  const int N = basis.size();
  const double e1 = basis.coeffs(0, 0);
  std::vector<std::vector<double>> nodes(N, std::vector<double>(1));
  std::vector<double> weights(N);
  for (int a = 0; a < N; ++a) {
    nodes[a][0] = eig.values[a];
    const double u1 = eig.vectors(0, a) / e1;
    weights[a] = u1 * u1;
    if (!(eig.values[a] > domain.a() && eig.values[a] < domain.b()))
      throw std::runtime_error("gauss_1d: node escaped the open interval");
  }

  CubatureRule rule;
  rule.d = 1;
  rule.degree = 2 * q + 1;
  rule.provenance = "jacobi_1d";
  assemble_rule(rule, nodes, weights);
  VerificationReport rep = verify_rule(rule, domain, 1e-9);
  if (!rep.passed) throw std::runtime_error("gauss_1d: exactness verification failed");
  return rule;
}

void cross_factor(const Matrix& c, std::vector<double>& v, std::vector<double>& w, double tol) {
  if (c.rows() != 3 || c.cols() != 3)
    throw std::invalid_argument("cross_factor: 3x3 matrix required");
  const double cnorm = frobenius_norm(c);
  // axial vector of the antisymmetric part: c x = u cross x
  const double u[3] = {0.5 * (c(2, 1) - c(1, 2)), 0.5 * (c(0, 2) - c(2, 0)),
                       0.5 * (c(1, 0) - c(0, 1))};
  const double unorm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  if (unorm <= tol * std::max(1.0, cnorm)) throw std::invalid_argument("matrices already commute");

  // p: the normalized column of c with largest norm (columns are orthogonal
  // to the axis, so p really is a unit vector perpendicular to u)
  int best = 0;
  double best_norm = -1.0;
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += c(i, j) * c(i, j);
    if (s > best_norm) {
      best_norm = s;
      best = j;
    }
  }
  double p[3];
  const double pn = std::sqrt(best_norm);
  for (int i = 0; i < 3; ++i) p[i] = c(i, best) / pn;

  // q = normalized u cross p completes the frame: p cross q = u / |u|
  double qv[3] = {u[1] * p[2] - u[2] * p[1], u[2] * p[0] - u[0] * p[2],
                  u[0] * p[1] - u[1] * p[0]};
  const double qn = std::sqrt(qv[0] * qv[0] + qv[1] * qv[1] + qv[2] * qv[2]);
  for (int i = 0; i < 3; ++i) qv[i] /= qn;

  // scale so (s p) cross (s q) reproduces the full axis length
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += qv[i] * c(i, j) * p[j];
  if (s < 0.0) {
    for (int i = 0; i < 3; ++i) qv[i] = -qv[i];
    s = -s;
  }
  const double root = std::sqrt(s);
  v.assign(3, 0.0);
  w.assign(3, 0.0);
  for (int i = 0; i < 3; ++i) {
    v[i] = root * p[i];
    w[i] = root * qv[i];
  }

  double resid2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double r = v[i] * w[j] - w[i] * v[j] + c(i, j);
      resid2 += r * r;
    }
  if (std::sqrt(resid2) > std::max(tol, 1e-12) * std::max(1.0, cnorm))
    throw std::runtime_error("cross_factor: factorization residual too large");
}

RadonResult radon_solve(const WeightedDomain& domain, std::optional<double> family_param) {
  if (domain.dim() != 2) throw std::invalid_argument("radon_solve: two-dimensional domain required");
  const int q = 2;
  GradedBasis basis = gram_schmidt_basis(domain, q);
  CoordinateMatrices cm = coordinate_matrices(domain, basis);
  const int n = basis.size();        // 6
  const int m = basis.lower_dim();   // 3
  const Matrix& a1 = cm.mats[0].matrix();
  const Matrix& a2 = cm.mats[1].matrix();

  // the commutator lives in the bottom-right (degree-2) block
  const Matrix cfull = commutator(a1, a2);
  double off = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i < m || j < m) off += cfull(i, j) * cfull(i, j);
  if (std::sqrt(off) > 1e-10 * std::max(1.0, frobenius_norm(cfull)))
    throw std::runtime_error("radon_solve: commutator has mass outside the top-degree block");
  Matrix c3(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c3(i, j) = cfull(m + i, m + j);

  std::vector<double> v3, w3;
  cross_factor(c3, v3, w3);
  std::vector<double> v(n, 0.0), w(n, 0.0);
  for (int i = 0; i < 3; ++i) {
    v[m + i] = v3[i];
    w[m + i] = w3[i];
  }

  const std::vector<double> cols[6] = {v, w, a1 * v, a1 * w, a2 * v, a2 * w};
  Matrix six(n, 6);
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < n; ++i) six(i, j) = cols[j][i];

  RadonResult out;
  out.kernel = null_space(six, 1e-10);
  out.kernel_dim = out.kernel.cols();
  if (out.kernel_dim == 0) throw std::runtime_error("no Radon extension found");

  auto combo = [&](const double* coeff, int terms) {
    std::vector<double> k(6, 0.0);
    for (int j = 0; j < terms; ++j)
      for (int i = 0; i < 6; ++i) k[i] += coeff[j] * out.kernel(i, j);
    return k;
  };
  auto disc = [](const std::vector<double>& k) { return k[2] * k[5] - k[3] * k[4]; };

  std::vector<double> k;
  if (out.kernel_dim == 1) {
    if (family_param)
      throw std::invalid_argument("radon_solve: family_param needs a multi-dimensional kernel");
    const double one = 1.0;
    k = combo(&one, 1);
  } else if (out.kernel_dim == 2) {
    if (family_param) {
      const double t = *family_param;
      if (!(t >= 0.0 && t < 1.0))
        throw std::invalid_argument("radon_solve: family_param must lie in [0,1)");
      const double coeff[2] = {std::cos(kPi * t), std::sin(kPi * t)};
      k = combo(coeff, 2);
    } else {
      // deterministic default: the grid member with the safest admissibility margin
      double best_disc = -1.0;
      for (int j = 0; j < 64; ++j) {
        const double t = j / 64.0;
        const double coeff[2] = {std::cos(kPi * t), std::sin(kPi * t)};
        std::vector<double> cand = combo(coeff, 2);
        if (disc(cand) > best_disc) {
          best_disc = disc(cand);
          k = std::move(cand);
        }
      }
    }
  } else {
    out.warnings.push_back("kernel dimension " + std::to_string(out.kernel_dim) +
                           " exceeds 2; sampling kernel directions over a sphere grid");
    double best_disc = -1.0;
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 32; ++j) {
        const double th = kPi * (i + 0.5) / 16.0, ph = 2.0 * kPi * j / 32.0;
        const double coeff[3] = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                                 std::cos(th)};
        std::vector<double> cand = combo(coeff, 3);
        if (disc(cand) > best_disc) {
          best_disc = disc(cand);
          k = std::move(cand);
        }
      }
  }
  const double dd = disc(k);
  if (dd <= 0.0) throw std::runtime_error("no Radon extension found");

  const double c = 1.0 / std::sqrt(dd);
  const double lam = -c * k[4], mu = -c * k[5], nu = c * k[2], rho = c * k[3];
  const double alpha = c * c * (k[1] * k[4] - k[0] * k[5]);
  const double beta = c * c * (k[0] * k[3] - k[1] * k[2]);

  auto extend = [&](const Matrix& a, double y0, double y1, double corner) {
    Matrix x(n + 1, n + 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x(i, j) = a(i, j);
    for (int i = 0; i < n; ++i) {
      const double e = y0 * v[i] + y1 * w[i];
      x(i, n) = e;
      x(n, i) = e;
    }
    x(n, n) = corner;
    return x;
  };

  ExtensionCandidate cand;
  cand.n = n;
  cand.N = n + 1;
  cand.d = 2;
  cand.extended.emplace_back(extend(a1, lam, mu, alpha));
  cand.extended.emplace_back(extend(a2, nu, rho, beta));
  cand.commutator_residual =
      frobenius_norm(commutator(cand.extended[0].matrix(), cand.extended[1].matrix()));
  cand.extension_error = 0.0;
  cand.converged = true;

  double norm_sum = 0.0;
  for (const auto& x : cand.extended) norm_sum += frobenius_norm(x.matrix());
  const double commute_tol = std::max(1e-8 * norm_sum, 3.0 * cand.commutator_residual);
  JointEigenSystem joint = simultaneous_diagonalize(cand.extended, 1e-12, commute_tol);
  Matrix rows(n, n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= n; ++j) rows(i, j) = joint.vectors(i, j);
  cand.q_rows = std::move(rows);
  cand.lambdas = joint.values;
  ZeroBlockSpec zb{m};
  const SObjective so = s_objective(cand.q_rows, cand.lambdas, cm.mats, &zb);
  cand.objective = so.s;
  cand.compat_penalty = so.penalty;

  CubatureRule rule = rule_from_extension(cand, basis, domain);
  rule.provenance = "radon_closed_form";
  out.extensions.push_back(std::move(cand));
  out.rules.push_back(std::move(rule));
  return out;
}

VerificationReport verify_rule(const CubatureRule& rule, const WeightedDomain& domain, double tol) {
  if (rule.d != domain.dim())
    throw std::invalid_argument("verify_rule: rule/domain dimension mismatch");
  VerificationReport rep;
  rep.tol = tol;
  rep.per_degree_error.assign(rule.degree + 1, 0.0);
  const std::vector<MultiIndex> monos = graded_monomials(rule.d, rule.degree);
  rep.worst_monomial = monos.front();
  for (const MultiIndex& mi : monos) {
    double s = 0.0;
    for (std::size_t a = 0; a < rule.nodes.size(); ++a)
      s += rule.weights[a] * eval_monomial(mi, rule.nodes[a]);
    const double mom = domain.moment(mi);
    const double err = std::abs(s - mom) / std::max(1.0, std::abs(mom));
    const int deg = std::accumulate(mi.begin(), mi.end(), 0);
    rep.per_degree_error[deg] = std::max(rep.per_degree_error[deg], err);
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_monomial = mi;
    }
  }
  rep.passed = rep.max_error <= tol;
  return rep;
}

bool theorem12_check(const CubatureRule& rule, const CoordinateMatrices& mats) {
  const BoundReport b = bound_report(mats.mats, &mats.block_sizes);
  return static_cast<int>(rule.nodes.size()) >= b.rank_bound;
}

bool theorem13_check(const CubatureRule& rule, const CoordinateMatrices& mats) {
  if (rule.nodes.empty() || static_cast<int>(mats.mats.size()) != rule.d)
    throw std::invalid_argument("theorem13_check: rule/matrix mismatch");
  for (int i = 0; i < rule.d; ++i) {
    const EigenDecomposition eig = sym_eigen(mats.mats[i]);
    double lo = rule.nodes[0][i], hi = rule.nodes[0][i];
    for (const auto& x : rule.nodes) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
    }
    if (!(lo <= eig.values.front() + 1e-9 && hi >= eig.values.back() - 1e-9)) return false;
  }
  return true;
}

SearchOutcome search_rule(const WeightedDomain& domain, int q, int target_size,
                          const SearchOpts& opts) {
  if (q < 0) throw std::invalid_argument("search_rule: q must be nonnegative");
  const int d = domain.dim();
  if (opts.method == SearchMethod::jacobi_1d && d != 1)
    throw std::invalid_argument("search_rule: jacobi_1d needs a one-dimensional domain");
  if (opts.method == SearchMethod::radon && (d != 2 || q != 2))
    throw std::invalid_argument("search_rule: radon needs a two-dimensional domain and q = 2");
  if (opts.method == SearchMethod::gradient_flow_method && d != 2)
    throw std::invalid_argument("search_rule: gradient_flow needs a two-dimensional domain");

  GradedBasis basis = gram_schmidt_basis(domain, q);
  CoordinateMatrices cm = coordinate_matrices(domain, basis);
  const int n = basis.size();
  const BoundReport bounds = bound_report(cm.mats, &cm.block_sizes);

  int N = target_size;
  if (N <= 0) {
    N = d == 2 ? std::max(bounds.rank_bound, bounds.dof_bound_2d.value_or(bounds.rank_bound))
               : bounds.rank_bound;
  }

  SearchOutcome out;
  if (N < bounds.rank_bound) {
    out.failure_reason = "below Theorem 12 bound";
    return out;
  }

  auto finish = [&](CubatureRule rule) {
    out.rule = std::move(rule);
    out.report = verify_rule(out.rule, domain, opts.verify_tol);
    if (out.report.passed) {
      out.report.theorems_checked = true;
      out.report.theorem12_ok = theorem12_check(out.rule, cm);
      out.report.theorem13_ok = theorem13_check(out.rule, cm);
    }
    out.success = out.report.passed;
    if (!out.success) out.failure_reason = "verification failed";
  };

  if (d == 1 &&
      (opts.method == SearchMethod::jacobi_1d ||
       (opts.method == SearchMethod::automatic && N == n))) {
    if (N != n) throw std::invalid_argument("search_rule: jacobi_1d yields exactly q+1 nodes");
    try {
      finish(gauss_1d(domain, q));
    } catch (const std::exception& e) {
      out.failure_reason = e.what();
    }
    return out;
  }

  if (opts.method == SearchMethod::radon ||
      (opts.method == SearchMethod::automatic && d == 2 && q == 2 && N == n + 1)) {
    if (opts.method == SearchMethod::radon && N != n + 1)
      throw std::invalid_argument("search_rule: radon yields exactly n+1 nodes");
    try {
      RadonResult rr = radon_solve(domain, std::nullopt);
      out.candidate = std::move(rr.extensions.front());
      finish(std::move(rr.rules.front()));
      return out;
    } catch (const std::exception& e) {
      if (opts.method == SearchMethod::radon) {
        out.failure_reason = e.what();
        return out;
      }
      // automatic mode falls back to the generic search below
    }
  }

  ZeroBlockSpec zb{basis.lower_dim()};
  try {
    ExtensionCandidate cs;
    bool have_s = false;
    if (opts.method == SearchMethod::automatic ||
        opts.method == SearchMethod::minimize_s_method) {
      MinimizeOpts mo;
      mo.max_sweeps = opts.sweeps;
      mo.seed = opts.seed;
      mo.multistarts = opts.multistarts;
      cs = minimize_s(cm.mats, N, &zb, mo);
      have_s = true;
      out.candidate = cs;
    }
    if (opts.method == SearchMethod::minimize_s_method || d != 2) {
      if (!cs.converged) {
        out.failure_reason = "extension search did not converge";
        return out;
      }
      finish(rule_from_extension(cs, basis, domain));
      return out;
    }

    // the jacobi stage proves existence and supplies the warm start; the
    // flow stage pushes the commutator residual to verification accuracy
    FlowOpts fo;
    fo.max_iters = opts.iters;
    fo.seed = Rng::derive(opts.seed, 1);
    fo.multistarts = opts.multistarts;
    if (have_s && cs.extended.size() == 2 && cs.N == N) fo.warm_start = &cs;
    ExtensionCandidate cf = gradient_flow(cm.mats, N, &zb, fo);
    if (cf.converged)
      out.candidate = std::move(cf);
    else if (have_s && cs.converged)
      out.candidate = std::move(cs);
    else {
      out.candidate = std::move(cf);
      out.failure_reason = "extension search did not converge";
      return out;
    }
    finish(rule_from_extension(out.candidate, basis, domain));
  } catch (const std::exception& e) {
    out.failure_reason = e.what();
    out.success = false;
  }
  return out;
}

}  // namespace commext
