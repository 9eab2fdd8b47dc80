#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "commext/cubature.hpp"
#include "commext/extensions.hpp"
#include "commext/fixtures.hpp"
#include "commext/rng.hpp"

using namespace commext;

namespace {

double rel_commutator(const Matrix& a, const Matrix& b) {
  return frobenius_norm(commutator(a, b)) /
         std::max(1.0, frobenius_norm(a) * frobenius_norm(b));
}

double family_norm_sq(const std::vector<SymMatrix>& mats) {
  double s = 0.0;
  for (const auto& m : mats) {
    const double f = frobenius_norm(m.matrix());
    s += f * f;
  }
  return s;
}

std::vector<double> eigenvalues(const SymMatrix& m) { return sym_eigen(m).values; }

}  // namespace

TEST_CASE("circulant extensions commute and embed the inputs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (int d = 2; d <= 3; ++d)
      for (int n = 2; n <= 5; ++n) {
        Rng rng(Rng::derive(seed, 100 * d + n));
        std::vector<Matrix> mats;
        for (int i = 0; i < d; ++i) mats.push_back(rng.gaussian_symmetric(n).matrix());
        const std::vector<Matrix> ext = circulant_extension(mats);
        REQUIRE(static_cast<int>(ext.size()) == d);
        for (int i = 0; i < d; ++i) {
          CHECK(ext[i].rows() == d * n);
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) CHECK(ext[i](a, b) == mats[i](a, b));
          for (int j = i + 1; j < d; ++j) CHECK(rel_commutator(ext[i], ext[j]) < 1e-12);
        }
      }

  CHECK_THROWS_AS(circulant_extension({}), std::invalid_argument);
  CHECK_THROWS_AS(circulant_extension({Matrix(2, 2), Matrix(3, 3)}), std::invalid_argument);
}

TEST_CASE("bound report on the degree-2 square matrices") {
  const WeightedDomain dom = WeightedDomain::square();
  const GradedBasis basis = gram_schmidt_basis(dom, 2);
  const CoordinateMatrices cm = coordinate_matrices(dom, basis);
  const BoundReport rep = bound_report(cm.mats, &cm.block_sizes);

  CHECK(rep.n == 6);
  CHECK(rep.d == 2);
  CHECK(rep.max_commutator_rank == 2);
  CHECK(rep.rank_bound == 7);
  CHECK(rep.param_bound == 8);
  REQUIRE(rep.structured_bound.has_value());
  CHECK(*rep.structured_bound == 7);
  REQUIRE(rep.dof_bound_2d.has_value());
  CHECK(*rep.dof_bound_2d == 7);

  // degree-5 case drives the documented 26-node target
  const GradedBasis b5 = gram_schmidt_basis(WeightedDomain::gaussian_plane(), 5);
  const CoordinateMatrices cm5 = coordinate_matrices(WeightedDomain::gaussian_plane(), b5);
  const BoundReport rep5 = bound_report(cm5.mats, &cm5.block_sizes);
  CHECK(rep5.n == 21);
  REQUIRE(rep5.dof_bound_2d.has_value());
  CHECK(*rep5.dof_bound_2d == 26);
  CHECK(rep5.rank_bound <= 26);

  CHECK_THROWS_AS(bound_report({}), std::invalid_argument);
}

TEST_CASE("conjugate_family preserves top block and spectrum") {
  const PlantedFamily fam = planted_family(4, 6, 2, 7);
  ExtensionCandidate cand;
  cand.n = 4;
  cand.N = 6;
  cand.d = 2;
  cand.extended = fam.extended;

  const double th = 0.8;
  Matrix u(2, 2);
  u(0, 0) = u(1, 1) = std::cos(th);
  u(0, 1) = std::sin(th);
  u(1, 0) = -std::sin(th);

  const ExtensionCandidate rot = conjugate_family(cand, u);
  for (int i = 0; i < 2; ++i) {
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        CHECK(rot.extended[i](a, b) ==
              doctest::Approx(fam.extended[i](a, b)).epsilon(1e-12));
    const std::vector<double> before = eigenvalues(fam.extended[i]);
    const std::vector<double> after = eigenvalues(rot.extended[i]);
    for (int k = 0; k < 6; ++k) CHECK(after[k] == doctest::Approx(before[k]).epsilon(1e-10));
  }
  CHECK(rot.commutator_residual < 1e-10);

  CHECK_THROWS_AS(conjugate_family(cand, Matrix(3, 3)), std::invalid_argument);
  Matrix skew(2, 2);
  skew(0, 1) = 2.0;
  CHECK_THROWS_AS(conjugate_family(cand, skew), std::invalid_argument);
}

TEST_CASE("solve_lambda recovers a planted spectrum with zero objective") {
  const int n = 5, N = 7;
  Rng rng(19);
  const Matrix v = sym_eigen(rng.gaussian_symmetric(N)).vectors;
  Matrix q_rows(n, N);
  for (int a = 0; a < n; ++a)
    for (int al = 0; al < N; ++al) q_rows(a, al) = v(a, al);

  std::vector<std::vector<double>> planted(2, std::vector<double>(N));
  for (auto& lam : planted)
    for (double& x : lam) x = rng.gaussian();

  std::vector<SymMatrix> mats;
  for (const auto& lam : planted) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int al = 0; al < N; ++al) s += q_rows(i, al) * lam[al] * q_rows(j, al);
        a(i, j) = s;
      }
    mats.emplace_back(std::move(a));
  }

  const std::vector<std::vector<double>> got = solve_lambda(q_rows, mats);
  const SObjective so = s_objective(q_rows, got, mats);
  CHECK(so.s < 1e-18 * family_norm_sq(mats));
  for (int i = 0; i < 2; ++i)
    for (int al = 0; al < N; ++al)
      CHECK(got[i][al] == doctest::Approx(planted[i][al]).epsilon(1e-8));

  // any perturbation of the optimal diagonals can only increase S
  std::vector<std::vector<double>> bumped = got;
  bumped[0][3] += 0.05;
  CHECK(s_objective(q_rows, bumped, mats).s > so.s);
}

TEST_CASE("commutator objective gradient matches finite differences") {
  const WeightedDomain dom = WeightedDomain::unit_disk();
  const GradedBasis basis = gram_schmidt_basis(dom, 2);
  const CoordinateMatrices cm = coordinate_matrices(dom, basis);
  ZeroBlockSpec zb{basis.lower_dim()};
  const CommutatorObjective obj(cm.mats[0], cm.mats[1], 7, &zb);

  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> v(obj.num_vars());
    for (double& x : v) x = rng.gaussian();

    const std::vector<double> grad = obj.gradient(v);
    REQUIRE(static_cast<int>(grad.size()) == obj.num_vars());

    const double h = 1e-6;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < obj.num_vars(); ++k) {
      std::vector<double> vp = v, vm = v;
      vp[k] += h;
      vm[k] -= h;
      const double fd = (obj.value(vp) - obj.value(vm)) / (2.0 * h);
      num += (grad[k] - fd) * (grad[k] - fd);
      den += grad[k] * grad[k];
    }
    CHECK(std::sqrt(num) < 1e-5 * std::max(1.0, std::sqrt(den)));
  }

  // assemble/value consistency and the forced zero block
  std::vector<double> v(obj.num_vars());
  for (double& x : v) x = rng.gaussian();
  const auto [x, y] = obj.assemble(v);
  CHECK(obj.value(v) ==
        doctest::Approx(std::pow(frobenius_norm(commutator(x, y)), 2)).epsilon(1e-12));
  for (int a = 0; a < zb.rows; ++a)
    for (int b = 6; b < 7; ++b) {
      CHECK(x(a, b) == 0.0);
      CHECK(y(a, b) == 0.0);
    }
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      CHECK(x(a, b) == cm.mats[0](a, b));
      CHECK(y(a, b) == cm.mats[1](a, b));
    }
}

TEST_CASE("minimize_s recovers a planted extension") {
  const PlantedFamily fam = planted_family(6, 7, 2, 1003);
  const double scale = family_norm_sq(fam.mats);

  MinimizeOpts opts;
  opts.max_sweeps = 5000;
  opts.seed = 45;
  opts.multistarts = 8;
  opts.s_tol = 1e-10 * scale * 0.999;
  const ExtensionCandidate cand = minimize_s(fam.mats, 7, nullptr, opts);

  CHECK(cand.converged);
  CHECK(cand.objective + cand.compat_penalty < 1e-10 * scale);
  CHECK(cand.n == 6);
  CHECK(cand.N == 7);
  REQUIRE(cand.extended.size() == 2);
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        CHECK(cand.extended[i](a, b) ==
              doctest::Approx(fam.mats[i](a, b)).epsilon(1e-4));

  REQUIRE(!cand.s_history.empty());
  for (std::size_t k = 1; k < cand.s_history.size(); ++k)
    CHECK(cand.s_history[k] <= cand.s_history[k - 1]);
}

TEST_CASE("gradient_flow drives the commutator residual to target") {
  const PlantedFamily fam = planted_family(5, 7, 2, 11);
  FlowOpts opts;
  opts.seed = 2;
  opts.multistarts = 4;
  opts.max_iters = 150000;
  const ExtensionCandidate cand = gradient_flow(fam.mats, 7, nullptr, opts);

  CHECK(cand.converged);
  double norm_sum = 0.0;
  for (const auto& m : fam.mats) norm_sum += frobenius_norm(m.matrix());
  CHECK(cand.commutator_residual <= 1e-13 * norm_sum);
  // the structured route never touches the original block
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b) CHECK(cand.extended[i](a, b) == fam.mats[i](a, b));
  CHECK(cand.extension_error == 0.0);
}

TEST_CASE("gradient_flow accepts a warm start") {
  const PlantedFamily fam = planted_family(6, 8, 2, 5);
  MinimizeOpts mo;
  mo.max_sweeps = 2000;
  mo.seed = 1;
  mo.multistarts = 4;
  // partial progress is fine here: the flow should finish the job
  const ExtensionCandidate cs = minimize_s(fam.mats, 8, nullptr, mo);
  REQUIRE(cs.extended.size() == 2);
  REQUIRE(cs.N == 8);

  double norm_sum = 0.0;
  for (const auto& m : fam.mats) norm_sum += frobenius_norm(m.matrix());

  FlowOpts fo;
  fo.seed = 3;
  fo.multistarts = 1;
  fo.max_iters = 150000;
  fo.residual_tol = 1e-12;  // relative to sum ||A_i||_F
  fo.warm_start = &cs;
  const ExtensionCandidate cf = gradient_flow(fam.mats, 8, nullptr, fo);
  CHECK(cf.converged);
  CHECK(cf.commutator_residual <= 1e-12 * norm_sum);
}

TEST_CASE("structured residual vanishes on a closed-form extension") {
  const RadonResult rr = radon_solve(WeightedDomain::square());
  REQUIRE(rr.extensions.size() == 1);
  const std::vector<StructuredResidual> res =
      structured_residual(rr.extensions[0], {1, 2, 3});
  REQUIRE(res.size() == 1);
  CHECK(res[0].top_coupling < 1e-10);
  CHECK(res[0].corner_block < 1e-10);
  CHECK(res[0].mixed_block < 1e-10);
  CHECK(res[0].added_corner < 1e-10);
}

TEST_CASE("extendability test factors the commutator") {
  const std::vector<SymMatrix> pair = theorem4_pair(6, 9);
  const Matrix c = commutator(pair[0].matrix(), pair[1].matrix());
  CHECK(numerical_rank(c) == 2);

  const ExtendabilityResult res = extendability_test(pair[0], pair[1]);
  Matrix check(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) check(i, j) = res.v[i] * res.w[j] - res.w[i] * res.v[j] + c(i, j);
  CHECK(frobenius_norm(check) < 1e-10 * std::max(1.0, frobenius_norm(c)));

  const std::vector<double> a1v = pair[0].matrix() * res.v;
  for (int i = 0; i < 6; ++i) CHECK(res.six_vectors(i, 2) == doctest::Approx(a1v[i]).epsilon(1e-12));
  CHECK(res.dependent == (numerical_rank(res.six_vectors) < 6));

  // with n = 5 the six vectors cannot be independent
  const std::vector<SymMatrix> small = theorem4_pair(5, 4);
  const ExtendabilityResult res5 = extendability_test(small[0], small[1]);
  CHECK(res5.dependent);
  REQUIRE(res5.kernel.cols() >= 1);
  CHECK(frobenius_norm(res5.six_vectors * res5.kernel) <
        1e-8 * std::max(1.0, frobenius_norm(res5.six_vectors)));

  // commutator of a generic commuting pair has rank 0: lemma does not apply
  CHECK_THROWS_AS(extendability_test(pair[0], pair[0]), std::runtime_error);
}

TEST_CASE("spectral containment holds for genuine extensions") {
  const PlantedFamily fam = planted_family(4, 6, 2, 9);
  for (int i = 0; i < 2; ++i) CHECK(spectral_containment(fam.mats[i], fam.extended[i]));

  Matrix a(2, 2);
  a(0, 0) = -1.0;
  a(1, 1) = 1.0;
  CHECK_THROWS_AS(spectral_containment(SymMatrix(a), SymMatrix(Matrix::identity(3))),
                  std::invalid_argument);
  CHECK_THROWS_AS(spectral_containment(SymMatrix(Matrix::identity(3)), SymMatrix(a)),
                  std::invalid_argument);
}
