// Joint log density against a from-scratch scalar reimplementation, plus the
// structural behaviors the samplers rely on: rank deficiency of the
// pairwise-difference prior, shift invariance, latent-sign gating.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "bless/model.hpp"
#include "bless/rng.hpp"
#include "util.hpp"

using namespace bless;

namespace {

ModelState random_state(const Dataset& d, std::uint64_t seed) {
  RngStream rs(seed, StreamKind::Generic, 9);
  const auto m = d.m(), p = d.p();
  ModelState s;
  s.beta.resize(m, p);
  s.beta0.resize(m);
  s.gamma.resize(m, p);
  s.theta.resize(m, p);
  for (std::int64_t j = 0; j < m; ++j) {
    s.beta0[j] = 0.4 * rs.normal();
    for (std::int64_t c = 0; c < p; ++c) {
      s.beta(j, c) = 0.5 * rs.normal();
      s.gamma(j, c) = rs.uniform();
      s.theta(j, c) = rs.normal();
    }
  }
  Eigen::MatrixXd a(p, p);
  for (std::int64_t r = 0; r < p; ++r)
    for (std::int64_t c = 0; c < p; ++c) a(r, c) = rs.normal();
  s.sigma_inv = a * a.transpose() + Eigen::MatrixXd::Identity(p, p);
  return s;
}

// independent scalar evaluation of the same density
double log_joint_oracle(const Dataset& d, const Hyperparams& hp, const ModelState& s) {
  const std::int64_t n = d.n(), m = d.m(), p = d.p();
  double total = 0.0;
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int64_t i = 0; i < n; ++i) {
      double eta = s.beta0[j];
      for (std::int64_t c = 0; c < p; ++c) eta += d.X(i, c) * s.beta(j, c);
      total += d.y_at(i, j) ? log_norm_cdf(eta) : log_norm_cdf(-eta);
    }
  }
  for (std::int64_t j = 0; j < m; ++j) {
    total += -0.5 * std::log(2.0 * M_PI * hp.sigma0_sq) -
             0.5 * s.beta0[j] * s.beta0[j] / hp.sigma0_sq;
    for (std::int64_t c = 0; c < p; ++c) {
      const double var = s.gamma(j, c) * hp.nu1 + (1.0 - s.gamma(j, c)) * hp.nu0;
      total += -0.5 * std::log(2.0 * M_PI * var) -
               0.5 * s.beta(j, c) * s.beta(j, c) / var;
      total += s.gamma(j, c) * s.theta(j, c) - std::log1p(std::exp(s.theta(j, c)));
    }
  }
  // pairwise-difference field, each unordered neighbor pair once
  double quad = 0.0;
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int32_t e = d.graph.offsets[j]; e < d.graph.offsets[j + 1]; ++e) {
      const std::int32_t r = d.graph.neighbors[e];
      if (r <= j) continue;
      for (std::int64_t a = 0; a < p; ++a)
        for (std::int64_t b = 0; b < p; ++b)
          quad += (s.theta(j, a) - s.theta(r, a)) * s.sigma_inv(a, b) *
                  (s.theta(j, b) - s.theta(r, b));
    }
  }
  const double logdet = std::log(s.sigma_inv.determinant());
  const double rank = static_cast<double>(m - d.graph.n_components);
  total += 0.5 * rank * logdet - 0.5 * quad;
  const double nu = hp.resolved_wishart_df(p);
  total += 0.5 * (nu - p - 1) * logdet - 0.5 * s.sigma_inv.trace() -
           0.5 * nu * p * std::log(2.0) - log_multigamma(static_cast<int>(p), 0.5 * nu);
  return total;
}

}  // namespace

TEST(Model, LogDetSpd) {
  Eigen::MatrixXd d = Eigen::Vector3d(2.0, 0.5, 7.0).asDiagonal();
  EXPECT_NEAR(log_det_spd(d, "t"), std::log(2.0 * 0.5 * 7.0), 1e-14);
  RngStream rs(3, StreamKind::Generic);
  Eigen::MatrixXd a(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = rs.normal();
  const Eigen::MatrixXd spd = a * a.transpose() + Eigen::MatrixXd::Identity(4, 4);
  EXPECT_NEAR(log_det_spd(spd, "t"), std::log(spd.determinant()), 1e-10);
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(log_det_spd(neg, "t"), numeric_error);
}

TEST(Model, ValidateStateRejections) {
  const Dataset d = bless_test::toy_dataset(2, 2, 6, 2, 5);
  ModelState s = random_state(d, 5);
  EXPECT_NO_THROW(validate_state(s, d));
  ModelState bad = s;
  bad.beta.resize(3, 2);
  EXPECT_THROW(validate_state(bad, d), config_error);
  bad = s;
  bad.gamma(1, 0) = 1.5;
  EXPECT_THROW(validate_state(bad, d), config_error);
  bad = s;
  bad.theta(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(validate_state(bad, d), numeric_error);
}

TEST(Model, McarQuadratic) {
  // 2x1 lattice: single pair
  Dataset d;
  d.mask = full_mask({2, 1});
  d.graph = build_graph(d.mask);
  Eigen::MatrixXd theta(2, 2);
  theta << 1.0, -2.0, 0.5, 1.0;
  Eigen::MatrixXd si(2, 2);
  si << 2.0, 0.3, 0.3, 1.0;
  const Eigen::Vector2d diff(0.5, -3.0);
  EXPECT_NEAR(mcar_quadratic(theta, d.graph, si), diff.dot(si * diff), 1e-14);

  // invariant under a common shift of every row (intrinsic prior)
  const Dataset d2 = bless_test::toy_dataset(3, 3, 4, 2, 7);
  ModelState s = random_state(d2, 11);
  const double q0 = mcar_quadratic(s.theta, d2.graph, s.sigma_inv);
  Eigen::MatrixXd shifted = s.theta;
  shifted.col(0).array() += 4.2;
  shifted.col(1).array() -= 1.7;
  EXPECT_NEAR(mcar_quadratic(shifted, d2.graph, s.sigma_inv), q0, 1e-10);
  EXPECT_GT(q0, 0.0);
}

TEST(Model, LogJointMatchesScalarOracle) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Dataset d = bless_test::toy_dataset(3, 2, 12, 2, seed, seed % 2 == 0);
    Hyperparams hp;
    hp.nu1 = 5.0;
    hp.nu0 = 1e-3;
    const ModelState s = random_state(d, seed + 40);
    const double got = log_joint(d, hp, s);
    const double want = log_joint_oracle(d, hp, s);
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::fabs(want))) << seed;
  }
}

TEST(Model, LogJointAugmentedConsistency) {
  const Dataset d = bless_test::toy_dataset(2, 2, 8, 1, 17);
  Hyperparams hp;
  const ModelState s = random_state(d, 23);
  const std::int64_t n = d.n(), m = d.m();

  // draw z respecting the response signs; the z-term swap must equal the
  // difference between normal log densities and probit log probabilities
  Eigen::MatrixXd z(n, m);
  RngStream rs(29, StreamKind::Generic);
  double swap = 0.0;
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int64_t i = 0; i < n; ++i) {
      double eta = s.beta0[j];
      for (std::int64_t c = 0; c < d.p(); ++c) eta += d.X(i, c) * s.beta(j, c);
      z(i, j) = rs.trunc_normal(eta, d.y_at(i, j) != 0);
      swap += log_norm_pdf(z(i, j) - eta) -
              (d.y_at(i, j) ? log_norm_cdf(eta) : log_norm_cdf(-eta));
    }
  }
  EXPECT_NEAR(log_joint(d, hp, s, &z) - log_joint(d, hp, s), swap, 1e-9);

  // any sign violation collapses the augmented density
  z(0, 0) = d.y_at(0, 0) ? -0.5 : 0.5;
  EXPECT_EQ(log_joint(d, hp, s, &z), -std::numeric_limits<double>::infinity());
}

TEST(Model, RankTracksComponents) {
  // disconnected mask: two 3x1 bars -> M = 6, G = 2, rank 4
  Dataset d;
  d.mask = make_mask({7, 1}, {1, 1, 1, 0, 1, 1, 1});
  d.graph = build_graph(d.mask);
  d.X.resize(4, 1);
  d.X << 0, 1, 0, 1;
  d.covariates = {"x"};
  d.y.assign(4 * 6, 0);
  for (std::size_t i = 0; i < d.y.size(); i += 3) d.y[i] = 1;
  Hyperparams hp;
  const double nu = hp.resolved_wishart_df(1);

  ModelState s;
  s.beta = Eigen::MatrixXd::Zero(6, 1);
  s.beta0 = Eigen::VectorXd::Zero(6);
  s.gamma = Eigen::MatrixXd::Constant(6, 1, 0.5);
  s.theta = Eigen::MatrixXd::Zero(6, 1);
  s.sigma_inv = Eigen::MatrixXd::Identity(1, 1);
  ModelState s4 = s;
  s4.sigma_inv(0, 0) = 4.0;

  // with theta = 0 the quadratic vanishes, so scaling the precision moves the
  // density by exactly (rank + nu - p - 1)/2 * log 4 - (4 - 1)/2
  const double want = 0.5 * (4.0 + nu - 1.0 - 1.0) * std::log(4.0) - 0.5 * 3.0;
  EXPECT_NEAR(log_joint(d, hp, s4) - log_joint(d, hp, s), want, 1e-10);
}
