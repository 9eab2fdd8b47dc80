#include "commext/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace commext {

namespace {

using json = nlohmann::ordered_json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("domain spec: bad " + what + " '" + s + "'");
  }
}

json domain_to_json(const WeightedDomain& d) {
  json j;
  j["kind"] = d.name();
  if (d.kind() == DomainKind::interval) {
    j["a"] = d.a();
    j["b"] = d.b();
  } else if (d.kind() == DomainKind::square_minus_square) {
    j["r"] = d.r();
  }
  return j;
}

WeightedDomain domain_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw std::runtime_error("rule JSON: field 'domain.kind' missing or not a string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "interval") {
    if (!j.contains("a") || !j.contains("b"))
      throw std::runtime_error("rule JSON: interval domain needs fields 'a' and 'b'");
    return WeightedDomain::interval(j["a"].get<double>(), j["b"].get<double>());
  }
  if (kind == "square") return WeightedDomain::square();
  if (kind == "unit_disk") return WeightedDomain::unit_disk();
  if (kind == "gaussian_plane") return WeightedDomain::gaussian_plane();
  if (kind == "square_minus_square") {
    if (!j.contains("r")) throw std::runtime_error("rule JSON: field 'domain.r' missing");
    return WeightedDomain::square_minus_square(j["r"].get<double>());
  }
  throw std::runtime_error("rule JSON: unknown domain kind '" + kind + "'");
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

WeightedDomain domain_from_spec(const std::string& spec) {
  const std::vector<std::string> p = split(spec, ':');
  const std::string& name = p[0];
  if (name == "interval") {
    if (p.size() == 1) return WeightedDomain::interval(-1.0, 1.0);
    if (p.size() == 3)
      return WeightedDomain::interval(parse_number(p[1], "endpoint"), parse_number(p[2], "endpoint"));
    throw std::invalid_argument("domain spec: interval takes zero or two arguments");
  }
  if (name == "square" && p.size() == 1) return WeightedDomain::square();
  if ((name == "unit_disk" || name == "disk") && p.size() == 1) return WeightedDomain::unit_disk();
  if (name == "gaussian_plane" && p.size() == 1) return WeightedDomain::gaussian_plane();
  if (name == "square_minus_square") {
    if (p.size() == 1) return WeightedDomain::square_minus_square(0.4);
    if (p.size() == 2) return WeightedDomain::square_minus_square(parse_number(p[1], "radius"));
    throw std::invalid_argument("domain spec: square_minus_square takes at most one argument");
  }
  throw std::invalid_argument("domain spec: unknown domain '" + spec + "'");
}

std::string domain_spec(const WeightedDomain& domain) {
  switch (domain.kind()) {
    case DomainKind::interval:
      return "interval:" + format17(domain.a()) + ":" + format17(domain.b());
    case DomainKind::square_minus_square:
      return "square_minus_square:" + format17(domain.r());
    default:
      return domain.name();
  }
}

std::string rule_to_json(const CubatureRule& rule, const WeightedDomain& domain,
                         const VerificationReport* report) {
  json j;
  j["domain"] = domain_to_json(domain);
  j["degree"] = rule.degree;
  j["nodes"] = rule.nodes;
  j["weights"] = rule.weights;
  j["provenance"] = rule.provenance;
  if (!rule.warnings.empty()) j["warnings"] = rule.warnings;
  if (report) j["verification"] = {{"max_error", report->max_error}, {"tol", report->tol}};
  return j.dump(2) + "\n";
}

CubatureRule rule_from_json(const std::string& text, WeightedDomain* domain) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("rule JSON: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("rule JSON: top level is not an object");
  for (const char* field : {"domain", "degree", "nodes", "weights"})
    if (!j.contains(field))
      throw std::runtime_error(std::string("rule JSON: field '") + field + "' missing");

  WeightedDomain dom = domain_from_json(j["domain"]);
  CubatureRule rule;
  rule.d = dom.dim();
  if (!j["degree"].is_number_integer() || j["degree"].get<int>() < 0)
    throw std::runtime_error("rule JSON: field 'degree' must be a nonnegative integer");
  rule.degree = j["degree"].get<int>();
  if (!j["nodes"].is_array() || !j["weights"].is_array())
    throw std::runtime_error("rule JSON: fields 'nodes' and 'weights' must be arrays");
  try {
    rule.nodes = j["nodes"].get<std::vector<std::vector<double>>>();
    rule.weights = j["weights"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("rule JSON: bad node/weight entry: ") + e.what());
  }
  if (rule.nodes.size() != rule.weights.size())
    throw std::runtime_error("rule JSON: node and weight counts differ");
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    if (static_cast<int>(rule.nodes[i].size()) != rule.d)
      throw std::runtime_error("rule JSON: node " + std::to_string(i) + " has wrong dimension");
  if (j.contains("provenance")) rule.provenance = j["provenance"].get<std::string>();
  if (j.contains("warnings")) rule.warnings = j["warnings"].get<std::vector<std::string>>();
  if (domain) *domain = dom;
  return rule;
}

std::string rule_to_csv(const CubatureRule& rule) {
  std::ostringstream out;
  for (int i = 0; i < rule.d; ++i) out << "x" << i + 1 << ",";
  out << "weight\n";
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    for (double x : rule.nodes[a]) out << format17(x) << ",";
    out << format17(rule.weights[a]) << "\n";
  }
  return out.str();
}

std::string rule_to_svg(const CubatureRule& rule, const WeightedDomain& domain) {
  constexpr double kSize = 800.0, kMargin = 60.0;

  // world box: domain outline plus all nodes, padded
  double lo[2] = {0.0, 0.0}, hi[2] = {0.0, 0.0};
  switch (domain.kind()) {
    case DomainKind::interval:
      lo[0] = domain.a();
      hi[0] = domain.b();
      lo[1] = -0.2 * (hi[0] - lo[0]);
      hi[1] = -lo[1];
      break;
    case DomainKind::gaussian_plane:
      lo[0] = lo[1] = -1.0;
      hi[0] = hi[1] = 1.0;
      break;
    default:
      lo[0] = lo[1] = -1.0;
      hi[0] = hi[1] = 1.0;
      break;
  }
  for (const auto& x : rule.nodes)
    for (int i = 0; i < rule.d; ++i) {
      lo[i] = std::min(lo[i], x[i]);
      hi[i] = std::max(hi[i], x[i]);
    }
  const double span = std::max(hi[0] - lo[0], hi[1] - lo[1]) * 1.05;
  const double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);
  const double scale = (kSize - 2.0 * kMargin) / span;
  auto X = [&](double x) { return kSize / 2.0 + (x - cx) * scale; };
  auto Y = [&](double y) { return kSize / 2.0 - (y - cy) * scale; };

  double wmax = 0.0;
  for (double w : rule.weights) wmax = std::max(wmax, w);
  const double rk = wmax > 0.0 ? 18.0 / std::sqrt(wmax) : 1.0;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
         "viewBox=\"0 0 800 800\">\n";
  out << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";

  const char* outline = "fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"";
  switch (domain.kind()) {
    case DomainKind::interval:
      out << "<line x1=\"" << px(X(domain.a())) << "\" y1=\"" << px(Y(0)) << "\" x2=\""
          << px(X(domain.b())) << "\" y2=\"" << px(Y(0)) << "\" stroke=\"black\" "
          << "stroke-width=\"1.5\"/>\n";
      break;
    case DomainKind::square:
      out << "<rect x=\"" << px(X(-1)) << "\" y=\"" << px(Y(1)) << "\" width=\"" << px(2 * scale)
          << "\" height=\"" << px(2 * scale) << "\" " << outline << "/>\n";
      break;
    case DomainKind::unit_disk:
      out << "<circle cx=\"" << px(X(0)) << "\" cy=\"" << px(Y(0)) << "\" r=\"" << px(scale)
          << "\" " << outline << "/>\n";
      break;
    case DomainKind::square_minus_square:
      out << "<rect x=\"" << px(X(-1)) << "\" y=\"" << px(Y(1)) << "\" width=\"" << px(2 * scale)
          << "\" height=\"" << px(2 * scale) << "\" " << outline << "/>\n";
      out << "<rect x=\"" << px(X(0.4 - domain.r())) << "\" y=\"" << px(Y(0.6 + domain.r()))
          << "\" width=\"" << px(2 * domain.r() * scale) << "\" height=\""
          << px(2 * domain.r() * scale) << "\" " << outline << " stroke-dasharray=\"6 4\"/>\n";
      break;
    case DomainKind::gaussian_plane:
      break;  // no boundary to draw
  }

  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    const double x = rule.nodes[a][0];
    const double y = rule.d > 1 ? rule.nodes[a][1] : 0.0;
    out << "<circle cx=\"" << px(X(x)) << "\" cy=\"" << px(Y(y)) << "\" r=\""
        << px(std::max(1.5, rk * std::sqrt(std::max(0.0, rule.weights[a])))) << "\" "
        << "fill=\"steelblue\" fill-opacity=\"0.75\" stroke=\"navy\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string report_to_json(const VerificationReport& report, const CubatureRule& rule,
                           const ExtensionCandidate* candidate,
                           const std::string& failure_reason) {
  json j;
  j["passed"] = report.passed;
  if (!failure_reason.empty()) j["failure_reason"] = failure_reason;
  j["max_error"] = report.max_error;
  j["tol"] = report.tol;
  j["worst_monomial"] = report.worst_monomial;
  j["per_degree_error"] = report.per_degree_error;
  j["theorems_checked"] = report.theorems_checked;
  if (report.theorems_checked) {
    j["theorem12_ok"] = report.theorem12_ok;
    j["theorem13_ok"] = report.theorem13_ok;
  }
  j["node_count"] = rule.nodes.size();
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  j["weight_sum"] = wsum;
  j["diametrical_pairs"] = diametrical_pairs(rule);
  if (!rule.warnings.empty()) j["warnings"] = rule.warnings;
  if (candidate) j["extension"] = json::parse(candidate_to_json(*candidate));
  return j.dump(2) + "\n";
}

std::string candidate_to_json(const ExtensionCandidate& c) {
  json j;
  j["n"] = c.n;
  j["N"] = c.N;
  j["d"] = c.d;
  j["seed"] = c.seed;
  j["sweeps"] = c.sweeps;
  j["converged"] = c.converged;
  j["objective"] = c.objective;
  j["compat_penalty"] = c.compat_penalty;
  j["commutator_residual"] = c.commutator_residual;
  j["extension_error"] = c.extension_error;
  if (c.q_rows.rows() > 0) {
    std::vector<std::vector<double>> rows(c.q_rows.rows());
    for (int i = 0; i < c.q_rows.rows(); ++i)
      rows[i].assign(c.q_rows.row_ptr(i), c.q_rows.row_ptr(i) + c.q_rows.cols());
    j["q_rows"] = rows;
  }
  if (!c.lambdas.empty()) j["lambdas"] = c.lambdas;
  j["s_history"] = c.s_history;
  return j.dump(2) + "\n";
}

int diametrical_pairs(const CubatureRule& rule, double tol) {
  int count = 0;
  for (std::size_t a = 0; a < rule.nodes.size(); ++a)
    for (std::size_t b = a + 1; b < rule.nodes.size(); ++b) {
      double s2 = 0.0;
      for (int i = 0; i < rule.d; ++i) {
        const double s = rule.nodes[a][i] + rule.nodes[b][i];
        s2 += s * s;
      }
      if (std::sqrt(s2) <= tol) ++count;
    }
  return count;
}

}  // namespace commext
