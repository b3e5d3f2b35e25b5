#include "sparsecov/random_knots.hpp"

#include <cmath>
#include <string>

namespace sparsecov {

namespace {

void check_scaler(const SpatialScaler& t) {
  if (t.t_values.size() < 1)
    throw std::invalid_argument("SpatialScaler: empty table");
  if (!t.t_values.allFinite() || (t.t_values.array() <= 0.0).any())
    throw std::invalid_argument("SpatialScaler: T(r) must be positive and finite");
}

void check_p(double p) {
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument("retention probability must be in (0, 1]");
}

/// log of binom(m, k) p^k (1-p)^(m-k), with the 0 * log(0) cases removed.
double log_binom_pmf(int m, int k, double p) {
  double lp = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0);
  if (k > 0) lp += k * std::log(p);
  if (m - k > 0) lp += (m - k) * std::log1p(-p);
  return lp;
}

void check_bernoulli(const SparseBatch& batch) {
  if (batch.scheme != Scheme::Bernoulli)
    throw std::invalid_argument("estimator needs a Bernoulli-sparsified batch");
}

/// beta_bar used inside the estimators: exact d/js for the unit scaler so
/// the unit-scaler reductions are bit-for-bit, the general sum otherwise.
double estimator_beta(const SparseBatch& batch, const SpatialScaler& t) {
  const auto n = static_cast<int>(batch.values.rows());
  const auto d = static_cast<double>(batch.values.cols());
  if (t.kind == ScalerKind::Unit) return d / static_cast<double>(batch.js);
  return beta_bar(n, static_cast<double>(batch.js) / d, t);
}

/// Column scale 1/T(M_j), with zero-coverage columns mapped to 0 so they
/// produce empty-sum outputs without evaluating T(0).
Vector coverage_scales(const CoverageCounts& m, const SpatialScaler& t) {
  Vector s(m.counts.size());
  for (Eigen::Index j = 0; j < m.counts.size(); ++j)
    s[j] = m.counts[j] > 0 ? 1.0 / t.at(m.counts[j]) : 0.0;
  return s;
}

Matrix centered_values(const SparseBatch& batch, Centering centering, const Vector* center) {
  if (centering == Centering::Empirical)
    return batch.values.rowwise() - batch.values.colwise().mean();
  if (center == nullptr)
    throw std::invalid_argument("fixed centering needs a center vector");
  if (center->size() != batch.values.cols())
    throw std::invalid_argument("center length does not match batch width");
  const Matrix shifted = batch.values.rowwise() - center->transpose();
  return batch.mask.select(shifted, 0.0);
}

GridFunction scaled_mean(const SparseBatch& batch, const Vector& scales, double beta) {
  const Vector colmean = batch.values.colwise().mean();
  return {beta * scales.cwiseProduct(colmean)};
}

Matrix scaled_cov(const SparseBatch& batch, const Vector& scales, double beta,
                  Centering centering, const Vector* center) {
  Matrix w = centered_values(batch, centering, center);
  w = w * scales.asDiagonal();
  return (beta * beta) * detail::centered_gram(w);
}

}  // namespace

SpatialScaler unit_scaler(int n) {
  if (n < 1) throw std::invalid_argument("unit_scaler: n must be positive");
  return {Vector::Ones(n), ScalerKind::Unit};
}

SpatialScaler t_optimal(double ratio, int n) {
  if (n < 1) throw std::invalid_argument("t_optimal: n must be positive");
  if (ratio < 0.0) throw std::invalid_argument("t_optimal: ratio must be nonnegative");
  Vector t(n);
  t[0] = 1.0;
  for (int r = 2; r <= n; ++r) {
    const double u = static_cast<double>(r - 1) / static_cast<double>(n - 1);
    t[r - 1] = std::sqrt(1.0 + ratio * u * u);
  }
  return {std::move(t), ScalerKind::Optimal};
}

SpatialScaler t_avg(int n) {
  if (n < 2) throw std::invalid_argument("t_avg: n must be at least 2");
  SpatialScaler t = t_optimal(static_cast<double>(n) / 2.0, n);
  t.kind = ScalerKind::Avg;
  return t;
}

SpatialScaler custom_scaler(Vector t_values) {
  SpatialScaler t{std::move(t_values), ScalerKind::Custom};
  check_scaler(t);
  return t;
}

double beta_bar(int n, double p, const SpatialScaler& t) {
  check_p(p);
  check_scaler(t);
  if (t.size() != n)
    throw std::invalid_argument("beta_bar: scaler table must have length n");
  double acc = 0.0;
  for (int r = 1; r <= n; ++r)
    acc += std::exp(log_binom_pmf(n - 1, r - 1, p) + std::log(p / t.at(r)));
  return 1.0 / acc;
}

SpatialConstants spatial_constants(int n, double p, const SpatialScaler& t) {
  check_p(p);
  if (n < 2) throw std::invalid_argument("spatial_constants: n must be at least 2");
  if (t.kind == ScalerKind::Unit)
    return {1.0 / p, 0.0, 0.0, p, n};
  const double bb = beta_bar(n, p, t);
  double s1 = 0.0;
  for (int r = 1; r <= n; ++r)
    s1 += std::exp(log_binom_pmf(n - 1, r - 1, p) + std::log(p) - 2.0 * std::log(t.at(r)));
  double s2 = 0.0;
  for (int r = 2; r <= n; ++r)
    s2 += std::exp(log_binom_pmf(n - 2, r - 2, p) + 2.0 * std::log(p) -
                   2.0 * std::log(t.at(r)));
  return {bb, bb * bb * s1 - 1.0 / p, 1.0 - bb * bb * s2, p, n};
}

CorrelationEnergy correlation_energy(const NodeMatrix& x) {
  const Matrix centered = x.values().rowwise() - x.values().colwise().mean();
  const Matrix gram = centered * centered.transpose();
  const double diag_sq = gram.diagonal().squaredNorm();
  return {diag_sq, gram.squaredNorm() - diag_sq};
}

GridFunction rk_mean(const SparseBatch& batch) {
  check_bernoulli(batch);
  const double beta =
      static_cast<double>(batch.values.cols()) / static_cast<double>(batch.js);
  return scaled_mean(batch, Vector::Ones(batch.values.cols()), beta);
}

GridCovariance rk_cov(const SparseBatch& batch, Centering centering, const Vector* center) {
  check_bernoulli(batch);
  const double beta =
      static_cast<double>(batch.values.cols()) / static_cast<double>(batch.js);
  return {scaled_cov(batch, Vector::Ones(batch.values.cols()), beta, centering, center),
          "random-knots"};
}

GridFunction rks_mean(const SparseBatch& batch, const CoverageCounts& m,
                      const SpatialScaler& t) {
  check_bernoulli(batch);
  if (m.counts.size() != batch.values.cols())
    throw std::invalid_argument("rks_mean: coverage length mismatch");
  if (t.size() != batch.values.rows())
    throw std::invalid_argument("rks_mean: scaler table must have length n");
  return scaled_mean(batch, coverage_scales(m, t), estimator_beta(batch, t));
}

GridCovariance rks_cov(const SparseBatch& batch, const CoverageCounts& m,
                       const SpatialScaler& t, Centering centering, const Vector* center) {
  check_bernoulli(batch);
  if (m.counts.size() != batch.values.cols())
    throw std::invalid_argument("rks_cov: coverage length mismatch");
  if (t.size() != batch.values.rows())
    throw std::invalid_argument("rks_cov: scaler table must have length n");
  return {scaled_cov(batch, coverage_scales(m, t), estimator_beta(batch, t), centering,
                     center),
          "rks"};
}

double closed_mse_rk(const NodeMatrix& x, int js) {
  if (js < 1 || js > x.dims())
    throw std::invalid_argument("closed_mse_rk: js must be in [1, d]");
  const double n = static_cast<double>(x.nodes());
  const double beta = static_cast<double>(x.dims()) / static_cast<double>(js);
  return (beta * beta - 1.0) * correlation_energy(x).r1 / (n * n);
}

double closed_mse_rks(const NodeMatrix& x, int js, const SpatialScaler& t) {
  if (js < 1 || js > x.dims())
    throw std::invalid_argument("closed_mse_rks: js must be in [1, d]");
  const int n = static_cast<int>(x.nodes());
  if (t.size() != n)
    throw std::invalid_argument("closed_mse_rks: scaler table must have length n");
  const double beta = static_cast<double>(x.dims()) / static_cast<double>(js);
  const double p = static_cast<double>(js) / static_cast<double>(x.dims());
  double c1 = 0.0;
  double c2 = 0.0;
  if (n >= 2) {
    const SpatialConstants sc = spatial_constants(n, p, t);
    c1 = sc.c1;
    c2 = sc.c2;
  }
  const CorrelationEnergy e = correlation_energy(x);
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return (((beta + c1) * (beta + c1) - 1.0) * e.r1 +
          ((1.0 - c2) * (1.0 - c2) - 1.0) * e.r2) /
         nn;
}

}  // namespace sparsecov
