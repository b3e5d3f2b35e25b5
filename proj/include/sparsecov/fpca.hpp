#pragma once

#include "sparsecov/core_grid.hpp"

namespace sparsecov {

/// Eigenpairs of a grid covariance under the 1/d quadrature convention:
/// eigenvalues are those of G/d and eigenfunctions are scaled by sqrt(d) so
/// that (1/d) sum_j psi_k(j/d)^2 = 1. `eigenvalues` is clipped at zero and
/// sorted descending; `raw_eigenvalues` keeps the unclipped values for
/// diagnostics.
struct EigenSystem {
  Vector eigenvalues;
  Vector raw_eigenvalues;
  Matrix eigenfunctions;  // column k = psi_k on the grid

  Eigen::Index grid_size() const { return eigenfunctions.rows(); }
  double quadrature_weight() const { return 1.0 / static_cast<double>(grid_size()); }
};

EigenSystem eigendecompose(const GridCovariance& g);

/// Smallest l whose cumulative share of the (nonnegative) spectrum strictly
/// exceeds `fve`. Throws numeric_error on an all-zero spectrum.
int truncate_fve(const EigenSystem& eigs, double fve = 0.95);

struct ScoreMatrix {
  Matrix values;  // n x kappa
};

/// Scores xi_ik = lambda_k^(-1/2) (1/d) sum_j (h_i - mhat)(j/d) psi_k(j/d).
ScoreMatrix fpc_scores(const NodeMatrix& h, const GridFunction& mhat,
                       const EigenSystem& eigs, int kappa);

/// HalfSquared: 1 - |<est, truth>|; Projection: sqrt(1 - <est, truth>^2).
/// Both use the 1/d quadrature inner product on unit-normalized copies; the
/// sign is the minimizer over {+1, -1} of ||est - s truth||.
enum class LossKind { HalfSquared, Projection };

struct Alignment {
  int sign = 1;
  double loss = 0.0;
};

Alignment align_and_loss(const Vector& est, const Vector& truth, LossKind kind);

/// Rotation-invariant distance between the spans of two sets of
/// quadrature-orthonormal columns: (1/sqrt 2) ||P_est - P_truth||_F.
double eigenspace_projection_loss(const Matrix& est_vectors, const Matrix& truth_vectors);

}  // namespace sparsecov
