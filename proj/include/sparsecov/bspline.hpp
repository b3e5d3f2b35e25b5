#pragma once

#include <span>
#include <utility>

#include "sparsecov/core_grid.hpp"
#include "sparsecov/random_knots.hpp"
#include "sparsecov/sparsify.hpp"

namespace sparsecov {

/// Clamped knot sequence: js equispaced interior knots l/(js+1) plus p
/// copies of 0 and 1. Supports js + p basis functions of order p.
struct KnotVector {
  Vector interior;
  int order = 0;
  Vector augmented;

  int basis_count() const { return static_cast<int>(interior.size()) + order; }
};

KnotVector make_knots(int js, int p);

/// All js + p basis values at t in [0, 1] (Cox-de Boor; right-closed at 1).
Vector eval_basis(double t, const KnotVector& knots);

/// Design matrix B (d rows, one per grid point) and gram V = B^T B / d.
struct SplineBasis {
  KnotVector knots;
  Matrix design;
  Matrix gram;
};

SplineBasis design_matrix(Eigen::Index d, const KnotVector& knots);

/// Full: least squares over all d grid points (the projection smoother).
/// SparseKnotsOnly: normal equations over the retained positions only,
/// evaluated on the full grid; needs |positions| >= basis_count.
enum class FitMode { Full, SparseKnotsOnly };

NodeMatrix fit_batch(const NodeMatrix& x, const SplineBasis& basis, FitMode mode,
                     std::span<const Eigen::Index> positions = {});

GridFunction bspline_mean(const NodeMatrix& smoothed);
GridCovariance bspline_cov(const NodeMatrix& smoothed);

/// Spatial variant: the smoothed values enter at the coordinates retained by
/// the Bernoulli mask and the coverage-scaled estimators are applied to them.
std::pair<GridFunction, GridCovariance> bspline_spatial(
    const NodeMatrix& smoothed, const SparseBatch& mask_batch, const SpatialScaler& t,
    Centering centering = Centering::Empirical, const Vector* center = nullptr);

}  // namespace sparsecov
