#pragma once

// The joint model density. Coefficients get a continuous spike-and-slab
// normal prior whose inclusion odds follow a logistic field theta; theta
// itself carries an intrinsic pairwise-difference Markov random field prior
// with a Wishart-distributed inter-covariate precision. The lattice graph
// may be disconnected, so the MRF log-normalizer uses rank (M - G).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <limits>
#include <optional>

#include "bless/dataset.hpp"
#include "bless/math.hpp"

namespace bless {

struct ModelState {
  Eigen::MatrixXd beta;       // M x P
  Eigen::VectorXd beta0;      // M
  Eigen::MatrixXd gamma;      // M x P, values in [0,1]
  Eigen::MatrixXd theta;      // M x P
  Eigen::MatrixXd sigma_inv;  // P x P, symmetric positive definite
};

inline double log_det_spd(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw numeric_error(std::string(what) + ": matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline void validate_state(const ModelState& s, const Dataset& d) {
  const auto m = d.m(), p = d.p();
  if (s.beta.rows() != m || s.beta.cols() != p || s.beta0.size() != m ||
      s.gamma.rows() != m || s.gamma.cols() != p || s.theta.rows() != m ||
      s.theta.cols() != p || s.sigma_inv.rows() != p || s.sigma_inv.cols() != p)
    throw config_error("model state dimensions do not match dataset");
  if ((s.gamma.array() < 0.0).any() || (s.gamma.array() > 1.0).any())
    throw config_error("gamma entries must lie in [0,1]");
  if (!s.beta.allFinite() || !s.beta0.allFinite() || !s.theta.allFinite() ||
      !s.sigma_inv.allFinite())
    throw numeric_error("model state contains non-finite values");
}

// Sum over unordered neighbor pairs of (theta_j - theta_r)' SigmaInv (theta_j - theta_r).
inline double mcar_quadratic(const Eigen::MatrixXd& theta, const NeighborGraph& g,
                             const Eigen::MatrixXd& sigma_inv) {
  double q = 0.0;
  const std::int64_t m = g.n_voxels();
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int32_t e = g.offsets[j]; e < g.offsets[j + 1]; ++e) {
      const std::int32_t r = g.neighbors[e];
      if (r <= j) continue;  // each unordered pair once
      const Eigen::VectorXd d = theta.row(j) - theta.row(r);
      q += d.dot(sigma_inv * d);
    }
  }
  return q;
}

// Joint log density. When z is supplied it must respect the response signs
// (z > 0 iff y = 1); a violation yields -inf rather than an exception so the
// caller can treat it as a rejected configuration.
inline double log_joint(const Dataset& d, const Hyperparams& hp, const ModelState& s,
                        const Eigen::MatrixXd* z = nullptr) {
  validate_state(s, d);
  const std::int64_t n = d.n(), m = d.m(), p = d.p();
  const double nu = hp.resolved_wishart_df(p);

  double ll = 0.0;
  for (std::int64_t j = 0; j < m; ++j) {
    const Eigen::VectorXd eta = d.X * s.beta.row(j).transpose() +
                                Eigen::VectorXd::Constant(n, s.beta0[j]);
    const std::uint8_t* yj = d.y_col(j);
    if (z) {
      for (std::int64_t i = 0; i < n; ++i) {
        const double zij = (*z)(i, j);
        const bool ok = yj[i] ? (zij > 0.0) : (zij <= 0.0);
        if (!ok) return -std::numeric_limits<double>::infinity();
        ll += log_norm_pdf(zij - eta[i]);
      }
    } else {
      for (std::int64_t i = 0; i < n; ++i)
        ll += yj[i] ? log_norm_cdf(eta[i]) : log_norm_cdf(-eta[i]);
    }
  }

  double lp = 0.0;
  for (std::int64_t j = 0; j < m; ++j) {
    lp += -0.5 * (std::log(2.0 * M_PI * hp.sigma0_sq) +
                  s.beta0[j] * s.beta0[j] / hp.sigma0_sq);
    for (std::int64_t c = 0; c < p; ++c) {
      const double g = s.gamma(j, c);
      const double var = hp.nu1 * g + hp.nu0 * (1.0 - g);
      lp += -0.5 * (std::log(2.0 * M_PI * var) + s.beta(j, c) * s.beta(j, c) / var);
      const double th = s.theta(j, c);
      lp += g * th - log1pexp(th);
    }
  }

  const double logdet = log_det_spd(s.sigma_inv, "log_joint sigma_inv");
  const double rank = static_cast<double>(m - d.graph.n_components);
  lp += 0.5 * rank * logdet - 0.5 * mcar_quadratic(s.theta, d.graph, s.sigma_inv);

  // Wishart(nu, I) prior on the precision, kept fully normalized.
  lp += 0.5 * (nu - p - 1) * logdet - 0.5 * s.sigma_inv.trace() -
        0.5 * nu * p * std::log(2.0) - log_multigamma(static_cast<int>(p), 0.5 * nu);

  return ll + lp;
}

}  // namespace bless
