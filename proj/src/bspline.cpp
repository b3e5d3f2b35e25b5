#include "sparsecov/bspline.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <vector>

namespace sparsecov {

namespace {

/// Factor a symmetric positive-definite gram after a conditioning check.
Eigen::LLT<Matrix> factor_gram(const Matrix& gram, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw numeric_error(std::string(what) + ": gram eigenvalue computation failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw numeric_error(std::string(what) + ": gram singular or ill-conditioned");
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw numeric_error(std::string(what) + ": factorization failed");
  return llt;
}

}  // namespace

KnotVector make_knots(int js, int p) {
  if (js < 1) throw std::invalid_argument("make_knots: js must be at least 1");
  if (p < 1) throw std::invalid_argument("make_knots: order must be at least 1");
  Vector interior(js);
  for (int l = 1; l <= js; ++l)
    interior[l - 1] = static_cast<double>(l) / static_cast<double>(js + 1);
  Vector augmented(js + 2 * p);
  augmented.head(p).setZero();
  augmented.segment(p, js) = interior;
  augmented.tail(p).setOnes();
  return {std::move(interior), p, std::move(augmented)};
}

Vector eval_basis(double t, const KnotVector& knots) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("eval_basis: t must lie in [0, 1]");
  const auto& tau = knots.augmented;
  const int p = knots.order;
  const int m = knots.basis_count();
  const int n_knots = static_cast<int>(tau.size());

  // Seed interval i with tau[i] <= t < tau[i+1]; the last nonempty interval
  // is closed on the right so the final basis function is 1 at t = 1.
  const double* first = tau.data();
  int i = static_cast<int>(std::upper_bound(first, first + n_knots, t) - first) - 1;
  i = std::clamp(i, p - 1, m - 1);

  // Triangular recursion from piecewise constants up to order p.
  std::vector<double> b(static_cast<std::size_t>(n_knots - 1), 0.0);
  b[static_cast<std::size_t>(i)] = 1.0;
  for (int q = 2; q <= p; ++q) {
    for (int k = 0; k + q < n_knots; ++k) {
      const double left_den = tau[k + q - 1] - tau[k];
      const double right_den = tau[k + q] - tau[k + 1];
      double v = 0.0;
      if (left_den > 0.0) v += (t - tau[k]) / left_den * b[k];
      if (right_den > 0.0) v += (tau[k + q] - t) / right_den * b[k + 1];
      b[static_cast<std::size_t>(k)] = v;
    }
  }
  Vector out(m);
  for (int k = 0; k < m; ++k) out[k] = b[static_cast<std::size_t>(k)];
  return out;
}

SplineBasis design_matrix(Eigen::Index d, const KnotVector& knots) {
  const int m = knots.basis_count();
  if (d < m)
    throw std::invalid_argument("design_matrix: need d >= js + order grid points");
  Matrix design(d, m);
  for (Eigen::Index j = 0; j < d; ++j)
    design.row(j) = eval_basis(static_cast<double>(j + 1) / static_cast<double>(d), knots)
                        .transpose();
  Matrix gram = design.transpose() * design / static_cast<double>(d);
  factor_gram(gram, "design_matrix");  // conditioning gate only
  return {knots, std::move(design), std::move(gram)};
}

NodeMatrix fit_batch(const NodeMatrix& x, const SplineBasis& basis, FitMode mode,
                     std::span<const Eigen::Index> positions) {
  const auto d = x.dims();
  if (basis.design.rows() != d)
    throw std::invalid_argument("fit_batch: basis built for a different grid");
  const int m = basis.knots.basis_count();

  Matrix coef;  // m x n
  if (mode == FitMode::Full) {
    const auto llt = factor_gram(basis.gram, "fit_batch");
    coef = llt.solve(basis.design.transpose() * x.values().transpose() /
                     static_cast<double>(d));
  } else {
    if (static_cast<Eigen::Index>(positions.size()) < m)
      throw std::invalid_argument("fit_batch: underdetermined fit; reduce knots or order");
    Matrix sub(positions.size(), m);
    Matrix rhs(positions.size(), x.nodes());
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const auto j = positions[k];
      if (j < 0 || j >= d)
        throw std::invalid_argument("fit_batch: position out of range");
      sub.row(static_cast<Eigen::Index>(k)) = basis.design.row(j);
      rhs.row(static_cast<Eigen::Index>(k)) = x.values().col(j).transpose();
    }
    const Matrix gram = sub.transpose() * sub / static_cast<double>(positions.size());
    const auto llt = factor_gram(gram, "fit_batch");
    coef = llt.solve(sub.transpose() * rhs / static_cast<double>(positions.size()));
  }
  return NodeMatrix((basis.design * coef).transpose());
}

GridFunction bspline_mean(const NodeMatrix& smoothed) { return sample_mean(smoothed); }

GridCovariance bspline_cov(const NodeMatrix& smoothed) {
  return {sample_cov(smoothed).values(), "bspline"};
}

std::pair<GridFunction, GridCovariance> bspline_spatial(
    const NodeMatrix& smoothed, const SparseBatch& mask_batch, const SpatialScaler& t,
    Centering centering, const Vector* center) {
  if (mask_batch.mask.rows() != smoothed.nodes() ||
      mask_batch.mask.cols() != smoothed.dims())
    throw std::invalid_argument("bspline_spatial: mask shape mismatch");
  SparseBatch masked{mask_batch.mask.select(smoothed.values(), 0.0), mask_batch.mask,
                     mask_batch.js, mask_batch.scheme, mask_batch.positions};
  const CoverageCounts m = coverage_counts(masked);
  GridFunction mean = rks_mean(masked, m, t);
  GridCovariance cov = rks_cov(masked, m, t, centering, center);
  return {std::move(mean), GridCovariance(cov.values(), "bspline-spatial")};
}

}  // namespace sparsecov
