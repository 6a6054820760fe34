#pragma once

// Shared fixtures: small synthetic datasets with either binary or continuous
// covariates, responses drawn from a genuine per-voxel probit so likelihood
// shapes are realistic.

#include <cstdint>
#include <string>
#include <vector>

#include "bless/dataset.hpp"
#include "bless/lattice.hpp"
#include "bless/rng.hpp"

namespace bless_test {

inline bless::Dataset toy_dataset(std::uint32_t nx, std::uint32_t ny, std::int64_t n,
                                  int p, std::uint64_t seed, bool continuous_x = false) {
  using namespace bless;
  Dataset d;
  d.mask = full_mask({nx, ny});
  d.graph = build_graph(d.mask);
  d.X.resize(n, p);
  RngStream xs(seed, StreamKind::Generic, 1);
  for (std::int64_t i = 0; i < n; ++i)
    for (int c = 0; c < p; ++c)
      d.X(i, c) = continuous_x ? xs.normal() : (xs.uniform() < 0.5 ? 0.0 : 1.0);
  d.covariates.clear();
  for (int c = 0; c < p; ++c) d.covariates.push_back("x" + std::to_string(c + 1));

  const std::int64_t m = d.m();
  d.y.assign(static_cast<std::size_t>(n) * m, 0);
  RngStream bs(seed, StreamKind::Generic, 2);
  Eigen::MatrixXd beta(m, p);
  Eigen::VectorXd beta0(m);
  for (std::int64_t j = 0; j < m; ++j) {
    beta0[j] = -0.5 + 0.6 * bs.normal();
    for (int c = 0; c < p; ++c) beta(j, c) = 0.7 * bs.normal();
  }
  for (std::int64_t j = 0; j < m; ++j) {
    RngStream ys(seed, StreamKind::Generic, 3, static_cast<std::uint32_t>(j));
    for (std::int64_t i = 0; i < n; ++i) {
      const double eta = d.X.row(i).dot(beta.row(j)) + beta0[j];
      d.y[static_cast<std::size_t>(j) * n + i] = ys.normal() + eta > 0.0 ? 1 : 0;
    }
  }
  return d;
}

}  // namespace bless_test
