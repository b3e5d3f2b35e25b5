#pragma once

#include <cstdint>
#include <vector>

#include "sparsecov/core_grid.hpp"

namespace sparsecov {

enum class Scheme { Bernoulli, FixedPositions };

/// Sparsified batch: values hold x_ij where the mask retained the entry and
/// zero elsewhere; js is the target retention count per row.
struct SparseBatch {
  Matrix values;
  BoolArray mask;
  int js = 0;
  Scheme scheme = Scheme::Bernoulli;
  std::vector<Eigen::Index> positions;  // FixedPositions only, 0-based, sorted
};

/// Per-coordinate coverage: M_j = number of nodes that retained coordinate j.
struct CoverageCounts {
  Eigen::VectorXi counts;
};

/// Retain each entry independently with probability js/d. Deterministic in
/// the seed; the same seed with a larger js yields a superset mask.
SparseBatch bernoulli_sparsify(const NodeMatrix& x, int js, std::uint64_t seed);

/// Retain every row at the same js positions, the grid indices nearest the
/// equispaced interior knots l/(js+1). Pure function of (d, js).
SparseBatch fixed_sparsify(const NodeMatrix& x, int js);

/// The 0-based grid positions used by fixed_sparsify.
std::vector<Eigen::Index> fixed_positions(Eigen::Index d, int js);

CoverageCounts coverage_counts(const SparseBatch& batch);

}  // namespace sparsecov
