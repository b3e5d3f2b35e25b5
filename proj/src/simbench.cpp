#include "sparsecov/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>
#include <utility>

#include "sparsecov/rng.hpp"
#include "sparsecov/selection.hpp"
#include "sparsecov/sparsify.hpp"

namespace sparsecov {

namespace {

double lambda_k(int k, HalfIndexConvention convention) {
  const int half = convention == HalfIndexConvention::Floor ? k / 2 : (k + 1) / 2;
  return std::pow(0.25, half);
}

/// psi_{2m-1}(t) = sqrt(2) cos(2 m pi t), psi_{2m}(t) = sqrt(2) sin(2 m pi t).
double psi_k(int k, double t) {
  const int m = (k + 1) / 2;
  const double arg = 2.0 * std::numbers::pi * m * t;
  return std::numbers::sqrt2 * (k % 2 == 1 ? std::cos(arg) : std::sin(arg));
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::min(std::max(threads, 1), count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

Dataset generate_dataset(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.d < 1 || spec.k0 < 1)
    throw std::invalid_argument("generate_dataset: n, d, k0 must be positive");

  const int n = spec.n;
  const int d = spec.d;
  const int k0 = spec.k0;

  Vector mean(d);
  for (int j = 0; j < d; ++j) {
    const double t = static_cast<double>(j + 1) / d;
    mean[j] = std::sin(2.0 * std::numbers::pi * (t - 0.5));
  }

  Vector lambda(k0);
  Matrix phi(d, k0);  // column k: phi_k = sqrt(lambda_k) psi_k on the grid
  Matrix psi(d, k0);
  for (int k = 1; k <= k0; ++k) {
    lambda[k - 1] = lambda_k(k, spec.convention);
    const double root = std::sqrt(lambda[k - 1]);
    for (int j = 0; j < d; ++j) {
      const double t = static_cast<double>(j + 1) / d;
      psi(j, k - 1) = psi_k(k, t);
      phi(j, k - 1) = root * psi(j, k - 1);
    }
  }

  Matrix scores(n, k0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < k0; ++k)
      scores(i, k) = rng::standard_normal(
          rng::derive(spec.seed, rng::kStreamScores, static_cast<std::uint64_t>(i),
                      static_cast<std::uint64_t>(k)));

  Matrix x = scores * phi.transpose();
  x.rowwise() += mean.transpose();

  Matrix cov = Matrix::Zero(d, d);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();

  return {NodeMatrix(std::move(x)), std::move(mean), std::move(cov),
          std::move(lambda), std::move(psi), std::move(scores)};
}

EigenSystem truth_eigensystem(const Dataset& data, int count) {
  if (count < 1 || count > data.true_lambda.size())
    throw std::invalid_argument("truth_eigensystem: count out of range");
  Vector lam = data.true_lambda.head(count);
  return {lam, lam, data.true_psi.leftCols(count)};
}

double amse_cov(const std::vector<std::pair<GridCovariance, GridCovariance>>& replicates) {
  if (replicates.empty()) throw std::invalid_argument("amse_cov: empty replicate list");
  double acc = 0.0;
  for (const auto& [a, b] : replicates) acc += frobenius_mse(a, b, true);
  return acc / static_cast<double>(replicates.size());
}

namespace {

/// Indices grouped by equal true eigenvalue (relative tolerance), for the
/// rotation-invariant eigenspace loss.
std::vector<std::pair<int, int>> eigen_groups(const Vector& lambda, int kappa) {
  std::vector<std::pair<int, int>> groups;
  const double tol = 1e-9 * std::max(lambda[0], 1.0);
  int start = 0;
  for (int k = 1; k <= kappa; ++k) {
    if (k == kappa || std::abs(lambda[k] - lambda[start]) > tol) {
      groups.emplace_back(start, k);
      start = k;
    }
  }
  return groups;
}

EigenAmse eigen_errors_single(const EigenSystem& est, const EigenSystem& truth, int kappa) {
  const auto d = truth.grid_size();
  EigenAmse out;
  for (int k = 0; k < kappa; ++k) {
    const double dl = est.eigenvalues[k] - truth.eigenvalues[k];
    out.lambda += dl * dl;

    const Vector phi_true = std::sqrt(truth.eigenvalues[k]) * truth.eigenfunctions.col(k);
    Vector phi_est = std::sqrt(est.eigenvalues[k]) * est.eigenfunctions.col(k);
    const auto align = align_and_loss(est.eigenfunctions.col(k),
                                      truth.eigenfunctions.col(k), LossKind::HalfSquared);
    phi_est *= static_cast<double>(align.sign);
    out.phi += (phi_est - phi_true).squaredNorm() / static_cast<double>(d);
  }
  for (const auto& [lo, hi] : eigen_groups(truth.eigenvalues, kappa)) {
    const double loss = eigenspace_projection_loss(
        est.eigenfunctions.middleCols(lo, hi - lo),
        truth.eigenfunctions.middleCols(lo, hi - lo));
    out.phi_subspace += truth.eigenvalues[lo] * loss * loss;
  }
  const double kd = static_cast<double>(kappa);
  out.lambda /= kd;
  out.phi /= kd;
  out.phi_subspace /= kd;
  return out;
}

}  // namespace

EigenAmse amse_eigensystem(const std::vector<EigenSystem>& estimates,
                           const EigenSystem& truth, int kappa) {
  if (estimates.empty())
    throw std::invalid_argument("amse_eigensystem: empty estimate list");
  if (kappa < 1 || kappa > truth.eigenvalues.size())
    throw std::invalid_argument("amse_eigensystem: kappa out of range");
  for (const auto& est : estimates)
    if (est.eigenvalues.size() < kappa || est.grid_size() != truth.grid_size())
      throw std::invalid_argument("amse_eigensystem: estimate shape mismatch");
  EigenAmse out;
  for (const auto& est : estimates) {
    const EigenAmse one = eigen_errors_single(est, truth, kappa);
    out.lambda += one.lambda;
    out.phi += one.phi;
    out.phi_subspace += one.phi_subspace;
  }
  const double s = static_cast<double>(estimates.size());
  out.lambda /= s;
  out.phi /= s;
  out.phi_subspace /= s;
  return out;
}

namespace {

struct CellMetrics {
  double amse_cov = 0.0;
  double mse_cov_unnorm = 0.0;
  double sup_cov = 0.0;
  double sup_mean = 0.0;
  EigenAmse eigen;
  int js = 0;
  bool failed = false;
};

SpatialScaler make_scaler(ScalerKind kind, int n, const NodeMatrix& x) {
  switch (kind) {
    case ScalerKind::Unit:
      return unit_scaler(n);
    case ScalerKind::Avg:
      return t_avg(n);
    case ScalerKind::Optimal:
      return t_optimal(correlation_energy(x).ratio(), n);
    case ScalerKind::Custom:
      throw std::invalid_argument("run_experiment: custom scalers not supported here");
  }
  throw std::invalid_argument("run_experiment: unknown scaler kind");
}

struct EstimatorOutput {
  GridFunction mean;
  GridCovariance cov;
};

/// One replicate of one cell: every requested estimator evaluated on a
/// common dataset, with shared knot selections and masks.
class ReplicateRunner {
 public:
  ReplicateRunner(const ExperimentConfig& config, int n, int d, std::uint64_t seed_r)
      : config_(config),
        data_(generate_dataset({n, d, config.k0, config.convention, seed_r})),
        seed_r_(seed_r),
        gbar_(sample_cov(data_.x)),
        mbar_(sample_mean(data_.x)) {
    const int count = std::min(d, std::min(config.k0, 30));
    truth_ = truth_eigensystem(data_, count);
    kappa_ = std::min(truncate_fve(truth_), count);
  }

  int kappa() const { return kappa_; }

  CellMetrics run(const std::string& estimator) {
    CellMetrics out;
    try {
      EstimatorOutput eo = build(estimator, out.js);
      const bool against_truth = estimator == "sample";
      const Matrix& cov_target = against_truth ? data_.true_cov : gbar_.values();
      const Vector& mean_target = against_truth ? data_.true_mean : mbar_.values;

      const Matrix diff = eo.cov.values() - cov_target;
      const double dd = static_cast<double>(diff.rows()) * diff.cols();
      out.mse_cov_unnorm = diff.squaredNorm();
      out.amse_cov = out.mse_cov_unnorm / dd;
      out.sup_cov = diff.cwiseAbs().maxCoeff();
      out.sup_mean = (eo.mean.values - mean_target).cwiseAbs().maxCoeff();
      out.eigen = eigen_errors_single(eigendecompose(eo.cov), truth_, kappa_);
    } catch (const std::exception&) {
      out.failed = true;
    }
    return out;
  }

 private:
  EstimatorOutput build(const std::string& estimator, int& js_out) {
    if (estimator == "sample") {
      js_out = 0;
      return {mbar_, gbar_};
    }
    if (estimator == "random-knots" || estimator == "rks") {
      const int js = knots_for(SelectionMethod::RandomKnots, 0);
      js_out = js;
      const SparseBatch batch = mask_batch(js);
      const Vector* center = centering_center();
      if (estimator == "random-knots")
        return {rk_mean(batch), rk_cov(batch, config_.centering, center)};
      const CoverageCounts m = coverage_counts(batch);
      const SpatialScaler t = make_scaler(config_.scaler, config_n(), data_.x);
      return {rks_mean(batch, m, t), rks_cov(batch, m, t, config_.centering, center)};
    }
    if (estimator == "bspline" || estimator == "bspline-spatial") {
      const auto method = config_.fit == FitMode::Full ? SelectionMethod::BsplineFull
                                                       : SelectionMethod::BsplineSparse;
      const int js = knots_for(method, config_.spline_order);
      js_out = js;
      const SplineBasis basis =
          design_matrix(data_.x.dims(), make_knots(js, config_.spline_order));
      NodeMatrix smoothed = [&] {
        if (config_.fit == FitMode::Full)
          return fit_batch(data_.x, basis, FitMode::Full);
        const auto positions =
            fixed_positions(data_.x.dims(), js + config_.spline_order);
        return fit_batch(data_.x, basis, FitMode::SparseKnotsOnly, positions);
      }();
      if (estimator == "bspline")
        return {bspline_mean(smoothed), bspline_cov(smoothed)};
      const SparseBatch batch = mask_batch(js);
      const SpatialScaler t = make_scaler(config_.scaler, config_n(), data_.x);
      auto [mean, cov] =
          bspline_spatial(smoothed, batch, t, config_.centering, centering_center());
      return {std::move(mean), std::move(cov)};
    }
    throw std::invalid_argument("run_experiment: unknown estimator " + estimator);
  }

  int config_n() const { return static_cast<int>(data_.x.nodes()); }

  int knots_for(SelectionMethod method, int order) {
    if (config_.js > 0) return config_.js;
    const auto key = std::make_pair(method, order);
    auto it = knots_cache_.find(key);
    if (it != knots_cache_.end()) return it->second;
    const int chosen =
        select_knots(data_.x, order, method, rng::derive(seed_r_, rng::kStreamSelection))
            .chosen;
    knots_cache_.emplace(key, chosen);
    return chosen;
  }

  SparseBatch mask_batch(int js) {
    return bernoulli_sparsify(data_.x, js, rng::derive(seed_r_, rng::kStreamMask));
  }

  const Vector* centering_center() {
    if (config_.centering == Centering::Empirical) return nullptr;
    return &mbar_.values;
  }

  const ExperimentConfig& config_;
  Dataset data_;
  std::uint64_t seed_r_;
  GridCovariance gbar_;
  GridFunction mbar_;
  EigenSystem truth_;
  int kappa_ = 0;
  std::map<std::pair<SelectionMethod, int>, int> knots_cache_;
};

int lower_median(std::vector<int> values) {
  std::sort(values.begin(), values.end());
  return values.empty() ? 0 : values[(values.size() - 1) / 2];
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  if (config.n_values.empty() || config.d_values.empty())
    throw std::invalid_argument("run_experiment: empty sweep");
  if (config.replicates < 1)
    throw std::invalid_argument("run_experiment: need at least one replicate");
  if (config.estimators.empty())
    throw std::invalid_argument("run_experiment: no estimators requested");

  const int threads = config.threads > 0
                          ? config.threads
                          : std::max(1u, std::thread::hardware_concurrency());

  std::vector<ResultRow> rows;
  for (int d : config.d_values) {
    for (int n : config.n_values) {
      // Per-replicate metrics for every estimator, slotted by replicate
      // index; merged in index order so results do not depend on these
      // running in parallel.
      std::vector<std::vector<CellMetrics>> results(
          config.estimators.size(), std::vector<CellMetrics>(config.replicates));
      parallel_for(config.replicates, threads, [&](int r) {
        ReplicateRunner runner(config, n, d,
                               rng::derive(config.seed, rng::kStreamReplicate,
                                           static_cast<std::uint64_t>(r)));
        for (std::size_t e = 0; e < config.estimators.size(); ++e)
          results[e][r] = runner.run(config.estimators[e]);
      });

      for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        const auto& per_rep = results[e];
        const bool failed =
            std::any_of(per_rep.begin(), per_rep.end(),
                        [](const CellMetrics& m) { return m.failed; });
        const auto emit = [&](const std::string& metric, double value, int js) {
          rows.push_back({config.estimators[e], n, d, js, metric, value,
                          config.replicates, config.seed});
        };
        if (failed) {
          emit("error", std::numeric_limits<double>::quiet_NaN(), 0);
          continue;
        }
        CellMetrics acc;
        std::vector<int> js_values;
        for (const auto& m : per_rep) {
          acc.amse_cov += m.amse_cov;
          acc.mse_cov_unnorm += m.mse_cov_unnorm;
          acc.sup_cov += m.sup_cov;
          acc.sup_mean += m.sup_mean;
          acc.eigen.lambda += m.eigen.lambda;
          acc.eigen.phi += m.eigen.phi;
          acc.eigen.phi_subspace += m.eigen.phi_subspace;
          js_values.push_back(m.js);
        }
        const double reps = static_cast<double>(config.replicates);
        const int js_med = lower_median(std::move(js_values));
        emit("amse_cov", acc.amse_cov / reps, js_med);
        emit("mse_cov_unnorm", acc.mse_cov_unnorm / reps, js_med);
        emit("sup_cov", acc.sup_cov / reps, js_med);
        emit("sup_mean", acc.sup_mean / reps, js_med);
        emit("amse_lambda", acc.eigen.lambda / reps, js_med);
        emit("amse_phi", acc.eigen.phi / reps, js_med);
        emit("amse_phi_space", acc.eigen.phi_subspace / reps, js_med);
      }
    }
  }
  return rows;
}

}  // namespace sparsecov
