#pragma once

#include <cstdint>
#include <vector>

#include "sparsecov/core_grid.hpp"

namespace sparsecov {

/// How the per-curve trajectory estimate h_i(J) is produced when scoring a
/// candidate knot count J.
enum class SelectionMethod { RandomKnots, BsplineFull, BsplineSparse };

struct KnotSelection {
  std::vector<int> per_curve;   // argmin AIC per curve
  int chosen = 0;               // lower median of per_curve
  std::vector<int> candidates;  // 1 .. min(10, d/2)
};

/// AIC(J) = log(rss/d) + 2 (J + p_eff) / d. rss must be positive; callers
/// floor a perfect-fit rss at d * eps^2 before calling.
double aic_value(double rss, Eigen::Index d, int j, int p_eff);

inline constexpr std::uint64_t kDefaultSelectionSeed = 0x5eedULL;

/// Per-curve AIC argmin over the candidate pool, aggregated by the lower
/// median. Ties break toward the smaller candidate. RandomKnots scores the
/// rescaled sparsified vector (d/J) h_i against x_i (AIC penalty uses
/// p_eff = 0 regardless of the argument); the spline methods score the
/// fitted trajectory. Candidates that cannot be fit (underdetermined or
/// ill-conditioned) are skipped; if every candidate is infeasible an
/// invalid_argument is thrown.
KnotSelection select_knots(const NodeMatrix& x, int p_eff, SelectionMethod method,
                           std::uint64_t seed = kDefaultSelectionSeed);

}  // namespace sparsecov
