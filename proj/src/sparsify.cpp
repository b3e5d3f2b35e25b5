#include "sparsecov/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsecov/rng.hpp"

namespace sparsecov {

namespace {
void check_js(int js, Eigen::Index d) {
  if (js < 1 || js > d)
    throw std::invalid_argument("sparsify: js must be in [1, d], got " +
                                std::to_string(js));
}
}  // namespace

SparseBatch bernoulli_sparsify(const NodeMatrix& x, int js, std::uint64_t seed) {
  check_js(js, x.dims());
  const double p = static_cast<double>(js) / static_cast<double>(x.dims());
  BoolArray mask(x.nodes(), x.dims());
  for (Eigen::Index i = 0; i < x.nodes(); ++i)
    for (Eigen::Index j = 0; j < x.dims(); ++j)
      mask(i, j) = rng::uniform(seed, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(j)) < p;
  Matrix values = mask.select(x.values(), 0.0);
  return {std::move(values), std::move(mask), js, Scheme::Bernoulli, {}};
}

std::vector<Eigen::Index> fixed_positions(Eigen::Index d, int js) {
  check_js(js, d);
  std::vector<Eigen::Index> pos;
  pos.reserve(static_cast<std::size_t>(js));
  for (int l = 1; l <= js; ++l) {
    const double t = static_cast<double>(l) * static_cast<double>(d) /
                     static_cast<double>(js + 1);
    auto idx = static_cast<Eigen::Index>(std::llround(t));
    idx = std::clamp<Eigen::Index>(idx, 1, d);
    pos.push_back(idx - 1);  // to 0-based
  }
  if (std::adjacent_find(pos.begin(), pos.end()) != pos.end())
    throw std::invalid_argument("fixed_positions: position collision, js too close to d");
  return pos;
}

SparseBatch fixed_sparsify(const NodeMatrix& x, int js) {
  auto pos = fixed_positions(x.dims(), js);
  BoolArray mask = BoolArray::Constant(x.nodes(), x.dims(), false);
  for (auto j : pos) mask.col(j) = true;
  Matrix values = mask.select(x.values(), 0.0);
  return {std::move(values), std::move(mask), js, Scheme::FixedPositions, std::move(pos)};
}

CoverageCounts coverage_counts(const SparseBatch& batch) {
  Eigen::VectorXi counts(batch.mask.cols());
  for (Eigen::Index j = 0; j < batch.mask.cols(); ++j)
    counts[j] = static_cast<int>(batch.mask.col(j).count());
  return {std::move(counts)};
}

}  // namespace sparsecov
