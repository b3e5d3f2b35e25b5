#include "sparsecov/fpca.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sparsecov {

EigenSystem eigendecompose(const GridCovariance& g) {
  const auto d = g.dims();
  const Matrix sym = 0.5 * (g.values() + g.values().transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success)
    throw numeric_error("eigendecompose: eigensolver failed");

  // Quadrature convention: eigenvalues of G/d, eigenvectors scaled by
  // sqrt(d); reorder from Eigen's ascending to descending.
  const double scale = 1.0 / static_cast<double>(d);
  const double root_d = std::sqrt(static_cast<double>(d));
  Vector raw(d);
  Matrix funcs(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    raw[k] = es.eigenvalues()[d - 1 - k] * scale;
    funcs.col(k) = es.eigenvectors().col(d - 1 - k) * root_d;
  }
  Vector clipped = raw.cwiseMax(0.0);
  return {std::move(clipped), std::move(raw), std::move(funcs)};
}

int truncate_fve(const EigenSystem& eigs, double fve) {
  const double total = eigs.eigenvalues.sum();
  if (!(total > 0.0)) throw numeric_error("truncate_fve: all-zero spectrum");
  double cum = 0.0;
  for (Eigen::Index k = 0; k < eigs.eigenvalues.size(); ++k) {
    cum += eigs.eigenvalues[k];
    if (cum / total > fve) return static_cast<int>(k) + 1;
  }
  return static_cast<int>(eigs.eigenvalues.size());
}

ScoreMatrix fpc_scores(const NodeMatrix& h, const GridFunction& mhat,
                       const EigenSystem& eigs, int kappa) {
  const auto d = h.dims();
  if (mhat.values.size() != d || eigs.grid_size() != d)
    throw std::invalid_argument("fpc_scores: grid size mismatch");
  if (kappa < 1 || kappa > eigs.eigenvalues.size())
    throw std::invalid_argument("fpc_scores: kappa out of range");
  for (int k = 0; k < kappa; ++k)
    if (!(eigs.eigenvalues[k] > 0.0))
      throw numeric_error("fpc_scores: nonpositive eigenvalue requested");

  const Matrix centered = h.values().rowwise() - mhat.values.transpose();
  Matrix scores = centered * eigs.eigenfunctions.leftCols(kappa) / static_cast<double>(d);
  for (int k = 0; k < kappa; ++k) scores.col(k) /= std::sqrt(eigs.eigenvalues[k]);
  return {std::move(scores)};
}

Alignment align_and_loss(const Vector& est, const Vector& truth, LossKind kind) {
  if (est.size() != truth.size())
    throw std::invalid_argument("align_and_loss: length mismatch");
  const double ne = est.norm();
  const double nt = truth.norm();
  if (!(ne > 0.0) || !(nt > 0.0))
    throw std::invalid_argument("align_and_loss: zero vector");
  // The 1/d quadrature weights cancel between the inner product and the
  // norms, so the cosine can be computed in plain Euclidean form.
  double c = est.dot(truth) / (ne * nt);
  c = std::clamp(c, -1.0, 1.0);
  const int sign = c < 0.0 ? -1 : 1;
  const double loss =
      kind == LossKind::HalfSquared ? 1.0 - std::abs(c) : std::sqrt(std::max(0.0, 1.0 - c * c));
  return {sign, loss};
}

double eigenspace_projection_loss(const Matrix& est_vectors, const Matrix& truth_vectors) {
  if (est_vectors.rows() != truth_vectors.rows() ||
      est_vectors.cols() != truth_vectors.cols())
    throw std::invalid_argument("eigenspace_projection_loss: shape mismatch");
  const double d = static_cast<double>(est_vectors.rows());
  // Columns are quadrature-orthonormal, so U = V / sqrt(d) has orthonormal
  // columns and P = U U^T is the orthogonal projector onto the span.
  const Matrix pe = est_vectors * est_vectors.transpose() / d;
  const Matrix pt = truth_vectors * truth_vectors.transpose() / d;
  return (pe - pt).norm() / std::sqrt(2.0);
}

}  // namespace sparsecov
