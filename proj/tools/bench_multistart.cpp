// compares serial and OpenMP multistart timings and checks the results agree
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "commext/cubature.hpp"
#include "commext/fixtures.hpp"

using namespace commext;

namespace {

struct RunResult {
  double seconds = 0.0;
  double objective = 0.0;
  double residual = 0.0;
  std::uint64_t seed = 0;
};

template <class F>
RunResult timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  ExtensionCandidate c = f();
  const auto t1 = std::chrono::steady_clock::now();
  RunResult r;
  r.seconds = std::chrono::duration<double>(t1 - t0).count();
  r.objective = c.objective + c.compat_penalty;
  r.residual = c.commutator_residual;
  r.seed = c.seed;
  return r;
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool report(const char* name, const RunResult& serial, const RunResult& par) {
  const bool same = std::memcmp(&serial.objective, &par.objective, sizeof(double)) == 0 &&
                    std::memcmp(&serial.residual, &par.residual, sizeof(double)) == 0 &&
                    serial.seed == par.seed;
  std::printf("%-28s serial %7.2fs   parallel %7.2fs   speedup %.2fx   results %s\n", name,
              serial.seconds, par.seconds, serial.seconds / std::max(par.seconds, 1e-9),
              same ? "identical" : "DIFFER");
  return same;
}

}  // namespace

int main() {
  const int threads = max_threads();
  std::printf("multistart benchmark, %d thread(s) available\n", threads);
#ifndef _OPENMP
  std::printf("(built without OpenMP; both runs are serial)\n");
#endif

  bool ok = true;

  {
    PlantedFamily fam = planted_family(6, 7, 2, 1000);
    MinimizeOpts opts;
    opts.max_sweeps = 800;
    opts.multistarts = 8;
    opts.seed = 42;
    auto run = [&] { return minimize_s(fam.mats, 7, nullptr, opts); };
    set_threads(1);
    RunResult serial = timed(run);
    set_threads(threads);
    RunResult par = timed(run);
    ok = report("minimize_s planted 6->7", serial, par) && ok;
  }

  {
    WeightedDomain dom = WeightedDomain::gaussian_plane();
    GradedBasis basis = gram_schmidt_basis(dom, 3);
    CoordinateMatrices cm = coordinate_matrices(dom, basis);
    ZeroBlockSpec zb{basis.lower_dim()};
    FlowOpts opts;
    opts.max_iters = 60000;
    opts.multistarts = 8;
    opts.seed = 7;
    auto run = [&] { return gradient_flow(cm.mats, 13, &zb, opts); };
    set_threads(1);
    RunResult serial = timed(run);
    set_threads(threads);
    RunResult par = timed(run);
    ok = report("gradient_flow gaussian q=3", serial, par) && ok;
  }

  if (!ok) {
    std::printf("parallel and serial runs disagreed\n");
    return 1;
  }
  return 0;
}
