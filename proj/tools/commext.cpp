// command line front end: bounds | solve | verify | fixture
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commext/cubature.hpp"
#include "commext/fixtures.hpp"
#include "commext/io.hpp"
#include "commext/linalg.hpp"
#include "commext/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace commext;

namespace {

struct ProblemConfig {
  std::string domain = "square";
  int q = 2;
  int N = 0;  // 0: derive from the bound report
  std::string method = "auto";
  std::uint64_t seed = 0;
  int sweeps = 500;
  long iters = 200000;
  int multistarts = 8;
  std::string out_dir = ".";
  std::vector<std::string> formats = {"json", "csv", "svg"};
  double tol = 1e-9;
};

SearchMethod parse_method(const std::string& m) {
  if (m == "auto") return SearchMethod::automatic;
  if (m == "radon") return SearchMethod::radon;
  if (m == "minimize_s") return SearchMethod::minimize_s_method;
  if (m == "gradient_flow") return SearchMethod::gradient_flow_method;
  if (m == "jacobi_1d") return SearchMethod::jacobi_1d;
  throw std::invalid_argument("unknown method '" + m + "'");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Layers a JSON config file under the flags: file values apply only where
/// the user did not pass the corresponding flag. Returns true when the file
/// supplied the seed.
bool apply_config_file(const std::string& path, ProblemConfig& cfg, const CLI::App* cmd) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config file: " + std::string(e.what()));
  }
  auto unset = [&](const char* flag) {
    const CLI::Option* o = cmd->get_option_no_throw(flag);
    return o == nullptr || o->count() == 0;
  };
  if (j.contains("domain") && unset("--domain")) cfg.domain = j["domain"].get<std::string>();
  if (j.contains("q") && unset("--q")) cfg.q = j["q"].get<int>();
  if (j.contains("N") && unset("--N")) cfg.N = j["N"].get<int>();
  if (j.contains("method") && unset("--method")) cfg.method = j["method"].get<std::string>();
  bool seed_from_file = false;
  if (j.contains("seed") && unset("--seed")) {
    cfg.seed = j["seed"].get<std::uint64_t>();
    seed_from_file = true;
  }
  if (j.contains("tol") && unset("--tol")) cfg.tol = j["tol"].get<double>();
  if (j.contains("budgets")) {
    const json& b = j["budgets"];
    if (b.contains("sweeps") && unset("--budget-sweeps")) cfg.sweeps = b["sweeps"].get<int>();
    if (b.contains("iters") && unset("--budget-iters")) cfg.iters = b["iters"].get<long>();
    if (b.contains("multistarts") && unset("--budget-multistarts"))
      cfg.multistarts = b["multistarts"].get<int>();
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    if (o.contains("dir") && unset("--out")) cfg.out_dir = o["dir"].get<std::string>();
    if (o.contains("formats") && unset("--format"))
      cfg.formats = o["formats"].get<std::vector<std::string>>();
  }
  return seed_from_file;
}

void apply_env_seed(ProblemConfig& cfg, bool seed_given) {
  if (seed_given) return;
  if (const char* e = std::getenv("COMMEXT_SEED")) cfg.seed = std::strtoull(e, nullptr, 10);
}

int cmd_bounds(const ProblemConfig& cfg) {
  WeightedDomain domain = domain_from_spec(cfg.domain);
  GradedBasis basis = gram_schmidt_basis(domain, cfg.q);
  CoordinateMatrices cm = coordinate_matrices(domain, basis);
  BoundReport b = bound_report(cm.mats, &cm.block_sizes);

  std::printf("domain               %s (d=%d)\n", domain.name().c_str(), domain.dim());
  std::printf("q                    %d\n", cfg.q);
  std::printf("n = dim P_q          %d\n", b.n);
  std::printf("max commutator rank  %d\n", b.max_commutator_rank);
  std::printf("rank bound           %d   rigorous\n", b.rank_bound);
  std::printf("parameter bound      %d   heuristic\n", b.param_bound);
  if (b.structured_bound)
    std::printf("structured bound     %d   heuristic\n", *b.structured_bound);
  if (b.dof_bound_2d) std::printf("dof bound (d=2)      %d   heuristic\n", *b.dof_bound_2d);
  return 0;
}

int cmd_solve(const ProblemConfig& cfg) {
  WeightedDomain domain = domain_from_spec(cfg.domain);
  const int n = binomial(domain.dim() + cfg.q, domain.dim());
  if (cfg.N > 0 && cfg.N < n)
    throw std::invalid_argument("N must be at least dim P_q = " + std::to_string(n));
  SearchOpts opts;
  opts.method = parse_method(cfg.method);
  opts.seed = cfg.seed;
  opts.sweeps = cfg.sweeps;
  opts.iters = cfg.iters;
  opts.multistarts = cfg.multistarts;
  opts.verify_tol = cfg.tol;

  SearchOutcome oc = search_rule(domain, cfg.q, cfg.N, opts);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  auto wants = [&](const std::string& f) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end();
  };
  if (!oc.rule.nodes.empty()) {
    if (wants("json")) write_file(dir / "rule.json", rule_to_json(oc.rule, domain, &oc.report));
    if (wants("csv")) write_file(dir / "rule.csv", rule_to_csv(oc.rule));
    if (wants("svg")) write_file(dir / "nodes.svg", rule_to_svg(oc.rule, domain));
  }
  write_file(dir / "report.json", report_to_json(oc.report, oc.rule, &oc.candidate,
                                                 oc.success ? "" : oc.failure_reason));

  if (oc.success) {
    std::printf("ok: %zu nodes, degree %d, max error %.3e (%s)\n", oc.rule.nodes.size(),
                oc.rule.degree, oc.report.max_error, oc.rule.provenance.c_str());
    return 0;
  }
  std::fprintf(stderr, "search failed: %s\n", oc.failure_reason.c_str());
  return 2;
}

int cmd_verify(const std::string& rule_path, const std::optional<std::string>& domain_override,
               const ProblemConfig& cfg) {
  std::ifstream in(rule_path);
  if (!in) throw std::runtime_error("cannot read rule file " + rule_path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  WeightedDomain domain = WeightedDomain::square();
  CubatureRule rule = rule_from_json(text, &domain);
  if (domain_override) domain = domain_from_spec(*domain_override);

  VerificationReport rep = verify_rule(rule, domain, cfg.tol);
  bool all_ok = rep.passed;
  if (rep.passed && rule.degree >= 1 && rule.degree % 2 == 1) {
    const int q = (rule.degree - 1) / 2;
    GradedBasis basis = gram_schmidt_basis(domain, q);
    CoordinateMatrices cm = coordinate_matrices(domain, basis);
    rep.theorems_checked = true;
    rep.theorem12_ok = theorem12_check(rule, cm);
    rep.theorem13_ok = theorem13_check(rule, cm);
    all_ok = all_ok && rep.theorem12_ok && rep.theorem13_ok;
  }

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  write_file(dir / "report.json", report_to_json(rep, rule, nullptr));

  std::printf("%s: max error %.3e (tol %.1e)", all_ok ? "pass" : "FAIL", rep.max_error, rep.tol);
  if (rep.theorems_checked)
    std::printf(", node-count bound %s, node-span bound %s", rep.theorem12_ok ? "ok" : "violated",
                rep.theorem13_ok ? "ok" : "violated");
  std::printf("\n");
  return all_ok ? 0 : 2;
}

json matrices_json(const std::vector<SymMatrix>& mats) {
  json arr = json::array();
  for (const auto& m : mats) {
    std::vector<std::vector<double>> rows(m.dim());
    for (int i = 0; i < m.dim(); ++i)
      rows[i].assign(m.matrix().row_ptr(i), m.matrix().row_ptr(i) + m.dim());
    arr.push_back(rows);
  }
  return arr;
}

int max_commutator_rank(const std::vector<SymMatrix>& mats) {
  int r = 0;
  for (std::size_t i = 0; i < mats.size(); ++i)
    for (std::size_t j = i + 1; j < mats.size(); ++j)
      r = std::max(r, numerical_rank(commutator(mats[i].matrix(), mats[j].matrix())));
  return r;
}

int cmd_fixture(const std::string& name, int n, int N, int d, const ProblemConfig& cfg) {
  json j;
  j["name"] = name;
  j["seed"] = cfg.seed;
  if (name == "theorem4") {
    std::vector<SymMatrix> mats = theorem4_pair(n, cfg.seed);
    j["n"] = n;
    j["d"] = 2;
    j["matrices"] = matrices_json(mats);
    j["commutator_rank"] = max_commutator_rank(mats);
  } else if (name == "planted") {
    if (N <= 0) N = n + 1;
    PlantedFamily fam = planted_family(n, N, d, cfg.seed);
    j["n"] = n;
    j["N"] = N;
    j["d"] = d;
    j["matrices"] = matrices_json(fam.mats);
    j["extension"] = matrices_json(fam.extended);
    j["commutator_rank"] = max_commutator_rank(fam.mats);
  } else if (name == "circulant_demo") {
    Rng rng(cfg.seed);
    std::vector<Matrix> mats;
    for (int i = 0; i < d; ++i) mats.push_back(rng.gaussian_matrix(n, n));
    std::vector<Matrix> ext = circulant_extension(mats);
    json marr = json::array(), earr = json::array();
    for (const auto& m : mats) {
      std::vector<std::vector<double>> rows(m.rows());
      for (int i = 0; i < m.rows(); ++i) rows[i].assign(m.row_ptr(i), m.row_ptr(i) + m.cols());
      marr.push_back(rows);
    }
    double resid = 0.0;
    for (std::size_t i = 0; i < ext.size(); ++i)
      for (std::size_t k = i + 1; k < ext.size(); ++k)
        resid = std::max(resid, frobenius_norm(commutator(ext[i], ext[k])));
    for (const auto& m : ext) {
      std::vector<std::vector<double>> rows(m.rows());
      for (int i = 0; i < m.rows(); ++i) rows[i].assign(m.row_ptr(i), m.row_ptr(i) + m.cols());
      earr.push_back(rows);
    }
    j["n"] = n;
    j["d"] = d;
    j["matrices"] = marr;
    j["extension"] = earr;
    j["max_commutator_norm"] = resid;
  } else {
    throw std::invalid_argument("unknown fixture '" + name +
                                "' (expected theorem4, planted, or circulant_demo)");
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"commuting-extension cubature toolkit"};
  app.require_subcommand(1);

  ProblemConfig cfg;
  std::string config_path;
  std::optional<std::string> domain_override;
  std::string rule_path;
  std::string fixture_name;
  int fx_n = 6, fx_N = 0, fx_d = 2;

  auto add_common = [&](CLI::App* cmd, bool with_search) {
    cmd->add_option("--domain", cfg.domain, "domain spec (square, unit_disk, gaussian_plane, interval[:a:b], square_minus_square[:r])");
    cmd->add_option("--q", cfg.q, "degree parameter; rules are exact to degree 2q+1");
    cmd->add_option("--seed", cfg.seed, "random seed (COMMEXT_SEED env var as fallback)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--config", config_path, "JSON config file; flags override its values");
    if (with_search) {
      cmd->add_option("--N", cfg.N, "target node count (default from the bound report)");
      cmd->add_option("--method", cfg.method,
                      "auto | radon | minimize_s | gradient_flow | jacobi_1d");
      cmd->add_option("--tol", cfg.tol, "verification tolerance");
      cmd->add_option("--format", cfg.formats, "artifact formats: json csv svg");
      cmd->add_option("--budget-sweeps", cfg.sweeps, "jacobi sweep budget per start");
      cmd->add_option("--budget-iters", cfg.iters, "gradient flow iteration budget per start");
      cmd->add_option("--budget-multistarts", cfg.multistarts, "number of random starts");
    }
  };

  CLI::App* bounds = app.add_subcommand("bounds", "print node-count bounds for a problem");
  add_common(bounds, false);

  CLI::App* solve = app.add_subcommand("solve", "search for a cubature rule and write artifacts");
  add_common(solve, true);

  CLI::App* verify = app.add_subcommand("verify", "verify a rule file against exact moments");
  verify->add_option("rule", rule_path, "rule.json produced by solve")->required();
  std::string domain_flag;
  verify->add_option("--domain", domain_flag, "override the domain embedded in the file");
  verify->add_option("--tol", cfg.tol, "verification tolerance");
  verify->add_option("--out", cfg.out_dir, "output directory");

  CLI::App* fixture = app.add_subcommand("fixture", "emit seeded fixture matrices as JSON");
  fixture->add_option("name", fixture_name, "theorem4 | planted | circulant_demo")->required();
  fixture->add_option("--n", fx_n, "matrix size");
  fixture->add_option("--N", fx_N, "planted extension size (default n+1)");
  fixture->add_option("--d", fx_d, "family size");
  fixture->add_option("--seed", cfg.seed, "random seed (COMMEXT_SEED env var as fallback)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    CLI::App* active = nullptr;
    for (CLI::App* c : {bounds, solve, verify, fixture})
      if (c->parsed()) active = c;
    if (!active) return 1;
    bool seed_set = false;
    if (!config_path.empty()) seed_set = apply_config_file(config_path, cfg, active);
    const CLI::Option* seed_opt = active->get_option_no_throw("--seed");
    apply_env_seed(cfg, seed_set || (seed_opt && seed_opt->count() > 0));
    if (cfg.q < 0) throw std::invalid_argument("q must be nonnegative");

    if (bounds->parsed()) return cmd_bounds(cfg);
    if (solve->parsed()) return cmd_solve(cfg);
    if (verify->parsed()) {
      if (verify->count("--domain") > 0) domain_override = domain_flag;
      return cmd_verify(rule_path, domain_override, cfg);
    }
    if (fixture->parsed()) return cmd_fixture(fixture_name, fx_n, fx_N, fx_d, cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
