#include <doctest.h>

#include "mask_oracle.hpp"
#include "sparsecov/random_knots.hpp"
#include "test_helpers.hpp"

using namespace sparsecov;

namespace {

// Values frozen from an independent Python enumeration of the same oracles.
struct Frozen {
  Matrix x;
  int js;
  Vector t;
  double mse;
};

std::vector<Frozen> frozen_cases() {
  std::vector<Frozen> cases;
  cases.push_back({testutil::x22(), 1, Vector::Ones(2), 1.3626708984375});
  cases.push_back({testutil::x33(), 2, Vector::Ones(3), 14.470968364197534});
  cases.push_back({testutil::x34(), 2, Vector::Ones(3), 40.92795138888889});
  cases.push_back({testutil::x24(), 2, Vector::Ones(2), 67.71240234375});
  cases.push_back({testutil::x33(), 2, t_avg(3).t_values, 13.051811464573172});
  cases.push_back({testutil::x33(), 2, testutil::dyadic_scaler(3, 0), 28.81929268426017});
  cases.push_back({testutil::x33(), 2, testutil::dyadic_scaler(3, 1), 25.389424198467395});
  cases.push_back({testutil::x34(), 2, t_avg(3).t_values, 40.144742962352765});
  cases.push_back({testutil::x34(), 2, testutil::dyadic_scaler(3, 0), 61.22256062529657});
  cases.push_back({testutil::x24(), 2, t_avg(2).t_values, 61.16597278470128});
  cases.push_back({testutil::x24(), 2, testutil::dyadic_scaler(2, 1), 122.42402343750007});
  return cases;
}

}  // namespace

TEST_CASE("pair oracle reproduces independently frozen expectations") {
  for (const auto& c : frozen_cases()) {
    const auto result = oracle::pair_oracle(c.x, c.js, c.t);
    CHECK(result.mse == doctest::Approx(c.mse).epsilon(1e-11));
  }
}

TEST_CASE("closed-form errors match the frozen oracle table") {
  for (const auto& c : frozen_cases()) {
    const NodeMatrix x(c.x);
    const double closed = closed_mse_rks(x, c.js, custom_scaler(c.t));
    CHECK(closed == doctest::Approx(c.mse).epsilon(1e-11));
  }
}

TEST_CASE("closed forms equal exhaustive enumeration on every tiny instance") {
  // every (n, d, js) with n*d <= 16; random data and a random positive scaler
  for (int n = 1; n * 1 <= 16; ++n) {
    for (int d = 1; n * d <= 16; ++d) {
      for (int js = 1; js <= d; ++js) {
        const Matrix x = testutil::random_matrix(n, d, 7000 + 100 * n + 10 * d + js);
        const NodeMatrix node(x);

        const auto unit = oracle::pair_oracle(x, js, Vector::Ones(n));
        CHECK(std::abs(closed_mse_rk(node, js) - unit.mse) < 1e-9);

        Vector tv(n);
        for (int r = 0; r < n; ++r)
          tv[r] = std::exp(2.0 * rng::uniform(7100 + n, d * 31 + js, r) - 1.0);
        const auto spatial = oracle::pair_oracle(x, js, tv);
        CHECK(std::abs(closed_mse_rks(node, js, custom_scaler(tv)) - spatial.mse) < 1e-9);
      }
    }
  }
}

TEST_CASE("pair-oracle mean equals the sample covariance entrywise") {
  const Matrix x = testutil::x33();
  const NodeMatrix node(x);
  const Matrix gbar = sample_cov(node).values();
  for (const Vector& t : {Vector(Vector::Ones(3)), t_avg(3).t_values,
                          testutil::dyadic_scaler(3, 0)}) {
    const auto result = oracle::pair_oracle(x, 2, t);
    CHECK((result.mean - gbar).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("full-mask enumeration of the estimator agrees with the pair oracle "
          "off the diagonal") {
  const Matrix x = testutil::x33();
  const NodeMatrix node(x);
  const Vector center = sample_mean(node).values;
  const Matrix gbar = sample_cov(node).values();
  const SpatialScaler t = t_avg(3);

  const auto full = oracle::full_mask_enum(
      x, 2,
      [&](const SparseBatch& batch) {
        return rks_cov(batch, coverage_counts(batch), t, Centering::Fixed, &center)
            .values();
      },
      [&](const SparseBatch& batch) {
        return rks_mean(batch, coverage_counts(batch), t).values;
      });

  // frozen from the independent Python enumeration
  CHECK(full.mse_offdiag == doctest::Approx(6.474873431628418).epsilon(1e-10));
  const auto pair = oracle::pair_oracle(x, 2, t.t_values);
  CHECK(full.mse_offdiag == doctest::Approx(pair.mse_offdiag).epsilon(1e-10));

  // unbiasedness holds exactly on off-diagonal entries under one shared mask
  for (int j = 0; j < 3; ++j)
    for (int jp = 0; jp < 3; ++jp)
      if (j != jp) CHECK(full.mean(j, jp) == doctest::Approx(gbar(j, jp)).epsilon(1e-10));

  // and the mean estimator is unbiased for the sample mean coordinatewise
  const Vector mbar = sample_mean(node).values;
  CHECK((full.mean_of_mean.transpose() - mbar).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("full-mask expectation of the production rk covariance is frozen") {
  // empirical centering, n=3 d=4 js=2; expectation enumerated independently
  Matrix expected(4, 4);
  expected << 0.7222222222222171, -0.6527777777777796, 0.8472222222222128,
      -0.3611111111111206, -0.6527777777777796, 2.4027777777777573,
      -2.0694444444444553, 0.15972222222221988, 0.8472222222222128,
      -2.0694444444444553, 5.166666666666686, 0.07638888888888884,
      -0.3611111111111206, 0.15972222222221988, 0.07638888888888884,
      1.569444444444437;

  const auto full = oracle::full_mask_enum(
      testutil::x34(), 2,
      [&](const SparseBatch& batch) { return rk_cov(batch).values(); },
      [&](const SparseBatch& batch) { return rk_mean(batch).values; });
  CHECK((full.mean - expected).cwiseAbs().maxCoeff() < 1e-10);
}
