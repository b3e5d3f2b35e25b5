#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "sparsecov/errors.hpp"

namespace sparsecov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// n x d data matrix: row i holds the vector of node i, sampled on the
/// implicit uniform grid t_j = j/d, j = 1..d.
class NodeMatrix {
 public:
  explicit NodeMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw std::invalid_argument("NodeMatrix: need at least one row and column");
    if (!values_.allFinite())
      throw std::invalid_argument("NodeMatrix: entries must be finite");
  }

  const Matrix& values() const { return values_; }
  Eigen::Index nodes() const { return values_.rows(); }
  Eigen::Index dims() const { return values_.cols(); }

  /// Grid point of column j (0-based): (j+1)/d.
  double grid_point(Eigen::Index j) const {
    return static_cast<double>(j + 1) / static_cast<double>(values_.cols());
  }

 private:
  Matrix values_;
};

/// A function sampled on the grid (mean estimates, eigenfunctions, ...).
struct GridFunction {
  Vector values;
};

/// d x d covariance estimate on the grid, tagged with the producing estimator.
class GridCovariance {
 public:
  GridCovariance(Matrix values, std::string provenance);

  const Matrix& values() const { return values_; }
  const std::string& provenance() const { return provenance_; }
  Eigen::Index dims() const { return values_.rows(); }

 private:
  Matrix values_;
  std::string provenance_;
};

GridFunction sample_mean(const NodeMatrix& x);
GridCovariance sample_cov(const NodeMatrix& x);

/// Squared Frobenius distance; `normalized` divides by d^2.
double frobenius_mse(const GridCovariance& a, const GridCovariance& b, bool normalized);

namespace detail {
/// (1/n) C^T C built through a rank update so the result is exactly
/// symmetric. Shared by every covariance estimator so that the js = d /
/// unit-scaler reductions are bit-for-bit.
Matrix centered_gram(const Matrix& centered);
}  // namespace detail

}  // namespace sparsecov
