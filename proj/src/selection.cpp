#include "sparsecov/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsecov/bspline.hpp"
#include "sparsecov/rng.hpp"
#include "sparsecov/sparsify.hpp"

namespace sparsecov {

double aic_value(double rss, Eigen::Index d, int j, int p_eff) {
  if (d < 1) throw std::invalid_argument("aic_value: d must be positive");
  if (!(rss > 0.0)) throw std::invalid_argument("aic_value: rss must be positive");
  return std::log(rss / static_cast<double>(d)) +
         2.0 * static_cast<double>(j + p_eff) / static_cast<double>(d);
}

namespace {

/// Perfect fits leave only solver noise in the residual. Floor the rss at
/// machine epsilon relative to the curve energy so every perfect-fit
/// candidate scores the same log term and the penalty decides the argmin.
double floor_rss(double rss, double curve_sumsq) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::max(rss, eps * std::max(curve_sumsq, 1.0));
}

}  // namespace

KnotSelection select_knots(const NodeMatrix& x, int p_eff, SelectionMethod method,
                           std::uint64_t seed) {
  const auto d = x.dims();
  const auto n = x.nodes();
  if (d < 2) throw std::invalid_argument("select_knots: need d >= 2");
  if (p_eff < 0) throw std::invalid_argument("select_knots: order must be nonnegative");

  const int j_max = static_cast<int>(std::min<Eigen::Index>(10, d / 2));
  std::vector<int> candidates;
  for (int j = 1; j <= j_max; ++j) candidates.push_back(j);

  const int penalty_p = method == SelectionMethod::RandomKnots ? 0 : p_eff;

  std::vector<double> best_aic(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_j(n, 0);
  bool any_feasible = false;

  for (int j : candidates) {
    Matrix fitted;  // n x d trajectory estimates under candidate j
    try {
      switch (method) {
        case SelectionMethod::RandomKnots: {
          const SparseBatch batch =
              bernoulli_sparsify(x, j, rng::derive(seed, rng::kStreamSelection, j));
          fitted = (static_cast<double>(d) / j) * batch.values;
          break;
        }
        case SelectionMethod::BsplineFull: {
          const SplineBasis basis = design_matrix(d, make_knots(j, p_eff));
          fitted = fit_batch(x, basis, FitMode::Full).values();
          break;
        }
        case SelectionMethod::BsplineSparse: {
          const int count = j + p_eff;
          if (count > d) throw std::invalid_argument("not enough positions");
          const auto positions = fixed_positions(d, count);
          const SplineBasis basis = design_matrix(d, make_knots(j, p_eff));
          fitted = fit_batch(x, basis, FitMode::SparseKnotsOnly, positions).values();
          break;
        }
      }
    } catch (const std::exception&) {
      continue;  // candidate infeasible for this data size
    }
    any_feasible = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double rss = (x.values().row(i) - fitted.row(i)).squaredNorm();
      const double aic =
          aic_value(floor_rss(rss, x.values().row(i).squaredNorm()), d, j, penalty_p);
      if (aic < best_aic[i]) {  // strict: ties keep the smaller candidate
        best_aic[i] = aic;
        best_j[i] = j;
      }
    }
  }

  if (!any_feasible)
    throw std::invalid_argument("select_knots: no feasible candidate knot count");

  std::vector<int> sorted = best_j;
  std::sort(sorted.begin(), sorted.end());
  const int chosen = sorted[(sorted.size() - 1) / 2];  // lower median
  return {std::move(best_j), chosen, std::move(candidates)};
}

}  // namespace sparsecov
