#pragma once

#include <cstdint>
#include <vector>

#include "commext/matrix.hpp"

namespace commext {

/// Seeded commuting N x N family restricted to its top-left n x n blocks.
/// `extended` keeps the planted completion, so recovery runs have a known
/// answer to compare against.
struct PlantedFamily {
  std::vector<SymMatrix> mats;
  std::vector<SymMatrix> extended;
};

PlantedFamily planted_family(int n, int target_size, int d, std::uint64_t seed);

/// A1 = diag(1..n) and a companion with seeded diagonal and off-diagonal
/// entries (w_a v_b - w_b v_a) / (lambda_a - lambda_b), giving
/// [A1, A2] = w v^T - v w^T of rank 2.
std::vector<SymMatrix> theorem4_pair(int n, std::uint64_t seed);

}  // namespace commext
