#pragma once

// Bias-reduced probit fits, one independent model per voxel. The objective is
// the probit log-likelihood plus half the log determinant of the Fisher
// information (Jeffreys penalty), maximized by modified scoring with step
// halving. The penalty keeps estimates finite under complete separation.
//
// Stable pieces, all expressed through the inverse Mills ratio:
//   residual   r_i = y=1 ? phi/Phi : -phi/(1-Phi)
//   weight     w_i = invmills(eta) * invmills(-eta)
//   d/deta log w_i = -2 eta - invmills(eta) + invmills(-eta)

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bless/dataset.hpp"
#include "bless/math.hpp"
#include "bless/model.hpp"
#include "bless/parallel.hpp"

namespace bless {

struct FirthOptions {
  int max_iter = 100;
  double grad_tol = 1e-6;
};

struct FirthFit {
  Eigen::VectorXd coef;    // intercept first, then covariates
  Eigen::VectorXd se;
  Eigen::VectorXd zstat;
  Eigen::VectorXd pvalue;  // two-sided Wald
  double penalized_loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // all-zero or all-one response
};

namespace detail {

struct FirthWork {
  Eigen::VectorXd eta, resid, wdiag, dlogw;
  double loglik = 0.0;
};

inline void firth_eval(const Eigen::MatrixXd& design, const std::uint8_t* y,
                       const Eigen::VectorXd& coef, FirthWork& wk) {
  const std::int64_t n = design.rows();
  wk.eta = design * coef;
  wk.resid.resize(n);
  wk.wdiag.resize(n);
  wk.dlogw.resize(n);
  wk.loglik = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double e = wk.eta[i];
    const double rp = inv_mills(e), rm = inv_mills(-e);
    wk.resid[i] = y[i] ? rp : -rm;
    wk.wdiag[i] = rp * rm;
    wk.dlogw[i] = -2.0 * e - rp + rm;
    wk.loglik += y[i] ? log_norm_cdf(e) : log_norm_cdf(-e);
  }
}

inline double penalized_objective(const Eigen::MatrixXd& design, const FirthWork& wk) {
  const Eigen::MatrixXd info =
      design.transpose() * wk.wdiag.asDiagonal() * design;
  return wk.loglik + 0.5 * log_det_spd(info, "firth information");
}

}  // namespace detail

// X holds covariates only; an intercept column is prepended internally.
inline FirthFit fit_firth_probit(const Eigen::MatrixXd& X, const std::uint8_t* y,
                                 const FirthOptions& opt = {}) {
  const std::int64_t n = X.rows(), p = X.cols();
  if (!X.allFinite()) throw numeric_error("firth: non-finite design");

  std::int64_t ones = 0;
  for (std::int64_t i = 0; i < n; ++i) ones += y[i] ? 1 : 0;
  const bool degenerate = (ones == 0 || ones == n);

  // Degenerate voxels keep an intercept-only fit; covariates report null.
  Eigen::MatrixXd design;
  if (degenerate) {
    design = Eigen::MatrixXd::Ones(n, 1);
  } else {
    design.resize(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = X;
  }
  const std::int64_t k = design.cols();

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(k);
  detail::FirthWork wk;
  detail::firth_eval(design, y, coef, wk);
  double obj = detail::penalized_objective(design, wk);

  FirthFit fit;
  bool converged = false;
  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    const Eigen::MatrixXd info =
        design.transpose() * wk.wdiag.asDiagonal() * design;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success)
      throw numeric_error("firth: information matrix not positive definite");
    // Leverages of the weighted design drive the score adjustment.
    Eigen::VectorXd adj(design.rows());
    const Eigen::MatrixXd ih = llt.solve(design.transpose());
    for (std::int64_t i = 0; i < design.rows(); ++i) {
      const double h = wk.wdiag[i] * design.row(i).dot(ih.col(i));
      adj[i] = wk.resid[i] + 0.5 * h * wk.dlogw[i];
    }
    const Eigen::VectorXd score = design.transpose() * adj;
    if (score.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd dir = llt.solve(score);
    double step = 1.0;
    bool moved = false;
    detail::FirthWork trial;
    for (int half = 0; half < 32; ++half, step *= 0.5) {
      detail::firth_eval(design, y, coef + step * dir, trial);
      const double cand = detail::penalized_objective(design, trial);
      if (cand > obj - 1e-12) {
        coef += step * dir;
        wk = trial;
        obj = cand;
        moved = true;
        break;
      }
    }
    if (!moved) break;  // no ascent direction left at double precision
  }

  const Eigen::MatrixXd info = design.transpose() * wk.wdiag.asDiagonal() * design;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success)
    throw numeric_error("firth: information matrix not positive definite");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k, k));

  fit.coef = Eigen::VectorXd::Zero(p + 1);
  fit.se = Eigen::VectorXd::Zero(p + 1);
  fit.zstat = Eigen::VectorXd::Zero(p + 1);
  fit.pvalue = Eigen::VectorXd::Ones(p + 1);
  for (std::int64_t c = 0; c < k; ++c) {
    fit.coef[c] = coef[c];
    fit.se[c] = std::sqrt(cov(c, c));
    fit.zstat[c] = fit.coef[c] / fit.se[c];
    fit.pvalue[c] = 2.0 * norm_cdf(-std::fabs(fit.zstat[c]));
  }
  if (degenerate) {
    for (std::int64_t c = 1; c <= p; ++c) {
      fit.se[c] = std::numeric_limits<double>::infinity();
      fit.zstat[c] = 0.0;
      fit.pvalue[c] = 1.0;
    }
  }
  fit.penalized_loglik = obj;
  fit.iterations = iter;
  fit.converged = converged || degenerate;
  fit.degenerate = degenerate;
  return fit;
}

struct FirthVoxelwise {
  Eigen::MatrixXd coef, se, zstat, pvalue;  // M x (P+1), intercept first
  std::vector<std::uint8_t> degenerate;
  std::vector<std::uint8_t> converged;
};

inline FirthVoxelwise fit_firth_all(const Dataset& data, const FirthOptions& opt = {},
                                    int workers = 1) {
  const std::int64_t m = data.m(), p = data.p();
  FirthVoxelwise out;
  out.coef.resize(m, p + 1);
  out.se.resize(m, p + 1);
  out.zstat.resize(m, p + 1);
  out.pvalue.resize(m, p + 1);
  out.degenerate.assign(m, 0);
  out.converged.assign(m, 0);
  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t j) {
    const FirthFit fit = fit_firth_probit(data.X, data.y_col(j), opt);
    out.coef.row(j) = fit.coef.transpose();
    out.se.row(j) = fit.se.transpose();
    out.zstat.row(j) = fit.zstat.transpose();
    out.pvalue.row(j) = fit.pvalue.transpose();
    out.degenerate[j] = fit.degenerate ? 1 : 0;
    out.converged[j] = fit.converged ? 1 : 0;
  });
  return out;
}

// Benjamini-Hochberg step-up adjustment (monotone adjusted p-values).
inline Eigen::VectorXd bh_adjust(const Eigen::VectorXd& pvals) {
  const std::int64_t m = pvals.size();
  std::vector<std::int64_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::int64_t a, std::int64_t b) { return pvals[a] < pvals[b]; });
  Eigen::VectorXd adj(m);
  double running = 1.0;
  for (std::int64_t r = m - 1; r >= 0; --r) {
    const double scaled = pvals[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1);
    running = std::min(running, scaled);
    adj[order[r]] = running;
  }
  return adj;
}

}  // namespace bless
