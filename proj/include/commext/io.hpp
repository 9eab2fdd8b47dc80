#pragma once

#include <string>

#include "commext/cubature.hpp"

namespace commext {

/// Parses "name" or "name:arg:arg", e.g. interval:a:b, square_minus_square:r;
/// bare interval means (-1,1), bare square_minus_square means r = 2/5.
WeightedDomain domain_from_spec(const std::string& spec);

/// Canonical spec string accepted by domain_from_spec.
std::string domain_spec(const WeightedDomain& domain);

/// {domain, degree, nodes, weights, provenance, verification: {max_error, tol}}
/// with shortest-round-trip number formatting.
std::string rule_to_json(const CubatureRule& rule, const WeightedDomain& domain,
                         const VerificationReport* report = nullptr);

/// Inverse of rule_to_json. When domain is given it receives the embedded
/// domain. Malformed input throws with the offending field in the message.
CubatureRule rule_from_json(const std::string& text, WeightedDomain* domain = nullptr);

/// One node per row, weight in the last column, 17 significant digits.
std::string rule_to_csv(const CubatureRule& rule);

/// 800x800 scatter plot, domain outline stroked, marker radius proportional
/// to sqrt(weight).
std::string rule_to_svg(const CubatureRule& rule, const WeightedDomain& domain);

/// Verification results plus search diagnostics for report.json. A nonempty
/// failure_reason is recorded as-is.
std::string report_to_json(const VerificationReport& report, const CubatureRule& rule,
                           const ExtensionCandidate* candidate = nullptr,
                           const std::string& failure_reason = "");

std::string candidate_to_json(const ExtensionCandidate& c);

/// Count of node pairs whose coordinate sums vanish within tol.
int diametrical_pairs(const CubatureRule& rule, double tol = 1e-8);

}  // namespace commext
