#include "sparsecov/core_grid.hpp"

namespace sparsecov {

GridCovariance::GridCovariance(Matrix values, std::string provenance)
    : values_(std::move(values)), provenance_(std::move(provenance)) {
  if (values_.rows() != values_.cols())
    throw std::invalid_argument("GridCovariance: matrix must be square");
  if (!values_.allFinite())
    throw numeric_error("GridCovariance: entries must be finite (" + provenance_ + ")");
  const double scale = values_.cwiseAbs().maxCoeff();
  const double asym = (values_ - values_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1.0))
    throw numeric_error("GridCovariance: matrix not symmetric (" + provenance_ + ")");
}

GridFunction sample_mean(const NodeMatrix& x) {
  return {x.values().colwise().mean().transpose()};
}

namespace detail {
Matrix centered_gram(const Matrix& centered) {
  const auto n = centered.rows();
  Matrix g = Matrix::Zero(centered.cols(), centered.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                               1.0 / static_cast<double>(n));
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}
}  // namespace detail

GridCovariance sample_cov(const NodeMatrix& x) {
  const Matrix centered = x.values().rowwise() - x.values().colwise().mean();
  return {detail::centered_gram(centered), "sample"};
}

double frobenius_mse(const GridCovariance& a, const GridCovariance& b, bool normalized) {
  if (a.dims() != b.dims())
    throw std::invalid_argument("frobenius_mse: shape mismatch");
  const double ss = (a.values() - b.values()).squaredNorm();
  if (!normalized) return ss;
  const double d = static_cast<double>(a.dims());
  return ss / (d * d);
}

}  // namespace sparsecov
