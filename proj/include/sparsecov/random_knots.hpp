#pragma once

#include "sparsecov/core_grid.hpp"
#include "sparsecov/sparsify.hpp"

namespace sparsecov {

enum class ScalerKind { Unit, Optimal, Avg, Custom };

/// Coverage-dependent rescaling function T on {1..n}, stored as a dense
/// table. T(r) > 0 for all r.
struct SpatialScaler {
  Vector t_values;
  ScalerKind kind = ScalerKind::Custom;

  int size() const { return static_cast<int>(t_values.size()); }
  /// Value at coverage r, r in 1..n.
  double at(int r) const { return t_values[r - 1]; }
};

SpatialScaler unit_scaler(int n);
/// MSE-minimizing scaler within the sqrt-quadratic family for a given
/// correlation ratio r2/r1 in [0, n-1].
SpatialScaler t_optimal(double ratio, int n);
/// Default scaler: t_optimal with the ratio replaced by n/2.
SpatialScaler t_avg(int n);
SpatialScaler custom_scaler(Vector t_values);

/// Normalization and error constants induced by (n, retention probability p,
/// scaler T). For the unit scaler these reduce to beta_bar = 1/p and
/// c1 = c2 = 0, which the estimators use in exact form.
struct SpatialConstants {
  double beta_bar = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double p = 0.0;
  int n = 0;
};

/// beta_bar = (sum_r (p/T(r)) binom(n-1, r-1) p^(r-1) (1-p)^(n-r))^(-1),
/// accumulated in log space so large n cannot overflow.
double beta_bar(int n, double p, const SpatialScaler& t);

/// beta_bar together with c1, c2 (c2 needs n >= 2).
SpatialConstants spatial_constants(int n, double p, const SpatialScaler& t);

/// r1 = sum_i ||y_i||^4 and r2 = 2 sum_{i<k} <y_i, y_k>^2 for the de-meaned
/// rows y_i = x_i - mean. r1 + r2 = ||Y Y^T||_F^2 and r2/r1 <= n-1.
struct CorrelationEnergy {
  double r1 = 0.0;
  double r2 = 0.0;
  /// r2/r1 with the all-rows-identical degenerate case mapped to 0.
  double ratio() const { return r1 > 0.0 ? r2 / r1 : 0.0; }
};

CorrelationEnergy correlation_energy(const NodeMatrix& x);

/// Centering of the sparsified covariance estimators.
///  - Empirical: subtract the batch average of the sparsified vectors
///    (the production estimator).
///  - Fixed: subtract the supplied nonrandom center at retained coordinates
///    only, i.e. use mask .* (x - center). This is the variant whose exact
///    moments the closed-form error expressions describe; tests center at
///    the sample mean.
enum class Centering { Empirical, Fixed };

GridFunction rk_mean(const SparseBatch& batch);
GridCovariance rk_cov(const SparseBatch& batch, Centering centering = Centering::Empirical,
                      const Vector* center = nullptr);

GridFunction rks_mean(const SparseBatch& batch, const CoverageCounts& m,
                      const SpatialScaler& t);
GridCovariance rks_cov(const SparseBatch& batch, const CoverageCounts& m,
                       const SpatialScaler& t, Centering centering = Centering::Empirical,
                       const Vector* center = nullptr);

/// Closed-form E||Ghat - Gbar||^2 for the plain random-knots estimator.
double closed_mse_rk(const NodeMatrix& x, int js);
/// Closed-form E||Ghat - Gbar||^2 for the spatial family under scaler t.
double closed_mse_rks(const NodeMatrix& x, int js, const SpatialScaler& t);

}  // namespace sparsecov
