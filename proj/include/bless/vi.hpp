#pragma once

// Mean-field coordinate ascent for the spatial spike-and-slab probit model.
// The augmentation variables are never stored: each voxel update recomputes
// the truncated-normal means on the fly and the reported objective collapses
// them out, leaving  sum_i w_i [log Phi(+-eta) - quad term]  plus the prior
// and entropy terms. Logistic factors of the inclusion field use the
// Jaakkola-Jordan quadratic bound at per-site curvature points xi, so the
// objective is a true lower bound and must be non-decreasing sweep to sweep.
//
// Subject weights w and per-coefficient prior mean shifts mu generalize the
// updates for the weighted-likelihood bootstrap; unit weights and zero shifts
// reduce every formula to the plain model.
//
// Designs with few distinct covariate rows (binary covariates) collapse the
// within-voxel subject loops to per-pattern sufficient statistics, which is
// what makes full-size runs cheap on one core.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <map>
#include <vector>

#include "bless/dataset.hpp"
#include "bless/firth.hpp"
#include "bless/math.hpp"
#include "bless/model.hpp"
#include "bless/parallel.hpp"

namespace bless {

struct ViOptions {
  double epsilon = 1e-3;  // absolute ELBO change at which a run stops
  int max_sweeps = 500;
  int workers = 1;
  bool jitter_spike_only = false;  // shift only the spike component
};

struct VariationalState {
  Eigen::MatrixXd m_beta;                // M x P
  std::vector<Eigen::MatrixXd> S_beta;   // per voxel P x P
  Eigen::VectorXd m_beta0, v_beta0;      // M
  Eigen::MatrixXd q_gamma;               // M x P
  Eigen::MatrixXd m_theta;               // M x P
  std::vector<Eigen::MatrixXd> S_theta;  // per voxel P x P
  Eigen::MatrixXd xi;                    // M x P, JJ curvature points
  double wishart_df = 0.0;
  Eigen::MatrixXd wishart_scale;         // P x P

  Eigen::MatrixXd e_sigma_inv() const { return wishart_df * wishart_scale; }
  std::int64_t m() const { return m_beta.rows(); }
  std::int64_t p() const { return m_beta.cols(); }
};

// Everything derivable from (dataset, weights, shifts) alone; reused across
// sweeps and across the annealing path.
class ViContext {
 public:
  ViContext(const Dataset& d, Eigen::VectorXd weights = {}, Eigen::MatrixXd shifts = {})
      : data_(&d), w_(std::move(weights)), shifts_(std::move(shifts)) {
    const std::int64_t n = d.n(), p = d.p(), m = d.m();
    if (w_.size() == 0) w_ = Eigen::VectorXd::Ones(n);
    if (w_.size() != n) throw config_error("weight vector length must equal N");
    if ((w_.array() < 0.0).any()) throw config_error("weights must be non-negative");
    if (shifts_.size() != 0 && (shifts_.rows() != m || shifts_.cols() != p))
      throw config_error("shift matrix must be M x P");
    sum_w_ = w_.sum();
    xtwx_ = d.X.transpose() * w_.asDiagonal() * d.X;
    xw_ = d.X.transpose() * w_;

    // Pattern table over distinct covariate rows.
    std::map<std::vector<double>, int> seen;
    pat_of_.resize(n);
    std::vector<std::vector<double>> rows;
    for (std::int64_t i = 0; i < n; ++i) {
      std::vector<double> key(p);
      for (std::int64_t c = 0; c < p; ++c) key[c] = d.X(i, c);
      auto [it, fresh] = seen.emplace(key, static_cast<int>(rows.size()));
      if (fresh) rows.push_back(key);
      pat_of_[i] = it->second;
    }
    const int npat = static_cast<int>(rows.size());
    compressed_ = npat <= 64;
    if (compressed_) {
      pat_x_.resize(npat, p);
      for (int q = 0; q < npat; ++q)
        for (std::int64_t c = 0; c < p; ++c) pat_x_(q, c) = rows[q][c];
      pat_w_ = Eigen::VectorXd::Zero(npat);
      for (std::int64_t i = 0; i < n; ++i) pat_w_[pat_of_[i]] += w_[i];
      wy_ = Eigen::MatrixXd::Zero(m, npat);
      for (std::int64_t j = 0; j < m; ++j) {
        const std::uint8_t* yj = d.y_col(j);
        for (std::int64_t i = 0; i < n; ++i)
          if (yj[i]) wy_(j, pat_of_[i]) += w_[i];
      }
    }

    color_index_[0].clear();
    color_index_[1].clear();
    for (std::int64_t j = 0; j < m; ++j) color_index_[d.graph.color[j]].push_back(j);
  }

  const Dataset& data() const { return *data_; }
  const Eigen::VectorXd& weights() const { return w_; }
  double sum_w() const { return sum_w_; }
  const Eigen::MatrixXd& xtwx() const { return xtwx_; }
  const Eigen::VectorXd& xw() const { return xw_; }
  bool has_shift() const { return shifts_.size() != 0; }
  double shift(std::int64_t j, std::int64_t p) const {
    return has_shift() ? shifts_(j, p) : 0.0;
  }
  bool compressed() const { return compressed_; }
  int n_patterns() const { return static_cast<int>(pat_x_.rows()); }
  const Eigen::MatrixXd& pat_x() const { return pat_x_; }
  const Eigen::VectorXd& pat_w() const { return pat_w_; }
  const Eigen::MatrixXd& wy() const { return wy_; }
  const std::vector<std::int64_t>& color_index(int c) const { return color_index_[c]; }

 private:
  const Dataset* data_;
  Eigen::VectorXd w_;
  Eigen::MatrixXd shifts_;
  double sum_w_ = 0.0;
  Eigen::MatrixXd xtwx_;
  Eigen::VectorXd xw_;
  bool compressed_ = false;
  Eigen::MatrixXd pat_x_;
  Eigen::VectorXd pat_w_;
  Eigen::MatrixXd wy_;
  std::vector<int> pat_of_;
  std::vector<std::int64_t> color_index_[2];
};

// Sufficient statistics of the implicit q(z) refresh at the current state:
// xwz = X' W (E[z] - m_beta0 1) and swz = sum_i w_i E[z_i].
struct ZStats {
  Eigen::VectorXd xwz;
  double swz = 0.0;
};

inline ZStats voxel_zstats(const VariationalState& vs, const ViContext& ctx,
                           std::int64_t j) {
  const Dataset& d = ctx.data();
  const std::int64_t p = d.p();
  ZStats out;
  out.xwz = Eigen::VectorXd::Zero(p);
  const double m0 = vs.m_beta0[j];
  if (ctx.compressed()) {
    const int npat = ctx.n_patterns();
    for (int q = 0; q < npat; ++q) {
      const double pw = ctx.pat_w()[q];
      if (pw == 0.0) continue;
      const double eta = ctx.pat_x().row(q).dot(vs.m_beta.row(j)) + m0;
      const double wy1 = ctx.wy()(j, q), wy0 = pw - wy1;
      const double r1 = inv_mills(eta), r0 = -inv_mills(-eta);
      const double swz_q = pw * eta + wy1 * r1 + wy0 * r0;
      out.swz += swz_q;
      out.xwz += (swz_q - pw * m0) * ctx.pat_x().row(q).transpose();
    }
  } else {
    const Eigen::VectorXd eta =
        d.X * vs.m_beta.row(j).transpose() + Eigen::VectorXd::Constant(d.n(), m0);
    const std::uint8_t* yj = d.y_col(j);
    for (std::int64_t i = 0; i < d.n(); ++i) {
      const double wi = ctx.weights()[i];
      if (wi == 0.0) continue;
      const double ez = yj[i] ? tnorm_mean_pos(eta[i]) : tnorm_mean_neg(eta[i]);
      out.swz += wi * ez;
      out.xwz += wi * (ez - m0) * d.X.row(i).transpose();
    }
  }
  return out;
}

// Per-subject truncated-normal means at the current state (test hook).
inline Eigen::VectorXd expected_z(const VariationalState& vs, const ViContext& ctx,
                                  std::int64_t j) {
  const Dataset& d = ctx.data();
  Eigen::VectorXd ez = d.X * vs.m_beta.row(j).transpose() +
                       Eigen::VectorXd::Constant(d.n(), vs.m_beta0[j]);
  const std::uint8_t* yj = d.y_col(j);
  for (std::int64_t i = 0; i < d.n(); ++i)
    ez[i] = yj[i] ? tnorm_mean_pos(ez[i]) : tnorm_mean_neg(ez[i]);
  return ez;
}

inline void update_beta_voxel(VariationalState& vs, const ViContext& ctx,
                              const Hyperparams& hp, const ViOptions& opt,
                              std::int64_t j, const ZStats& zs) {
  const std::int64_t p = vs.p();
  Eigen::MatrixXd prec = ctx.xtwx();
  Eigen::VectorXd rhs = zs.xwz;
  for (std::int64_t c = 0; c < p; ++c) {
    const double q = vs.q_gamma(j, c);
    const double dpc = q / hp.nu1 + (1.0 - q) / hp.nu0;
    prec(c, c) += dpc;
    const double mu = ctx.shift(j, c);
    if (mu != 0.0) rhs[c] += opt.jitter_spike_only ? (1.0 - q) / hp.nu0 * mu : dpc * mu;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw numeric_error("cavi: coefficient precision not positive definite");
  vs.S_beta[j] = llt.solve(Eigen::MatrixXd::Identity(p, p));
  vs.m_beta.row(j) = llt.solve(rhs).transpose();
}

inline void update_beta0_voxel(VariationalState& vs, const ViContext& ctx,
                               const Hyperparams& hp, std::int64_t j,
                               const ZStats& zs) {
  const double prec = ctx.sum_w() + 1.0 / hp.sigma0_sq;
  vs.m_beta0[j] = (zs.swz - ctx.xw().dot(vs.m_beta.row(j))) / prec;
  vs.v_beta0[j] = 1.0 / prec;
}

inline void update_gamma_voxel(VariationalState& vs, const ViContext& ctx,
                               const Hyperparams& hp, const ViOptions& opt,
                               std::int64_t j) {
  const double log_ratio = 0.5 * std::log(hp.nu0 / hp.nu1);
  for (std::int64_t c = 0; c < vs.p(); ++c) {
    const double mu = ctx.shift(j, c);
    const double Spp = vs.S_beta[j](c, c);
    const double dev = vs.m_beta(j, c) - mu;
    double logit;
    if (opt.jitter_spike_only) {
      const double slab = vs.m_beta(j, c) * vs.m_beta(j, c) + Spp;
      logit = vs.m_theta(j, c) + log_ratio + (dev * dev + Spp) / (2.0 * hp.nu0) -
              slab / (2.0 * hp.nu1);
    } else {
      logit = vs.m_theta(j, c) + log_ratio +
              (dev * dev + Spp) * (0.5 / hp.nu0 - 0.5 / hp.nu1);
    }
    vs.q_gamma(j, c) = sigmoid(logit);
  }
}

inline void update_theta_voxel(VariationalState& vs, const ViContext& ctx,
                               const Eigen::MatrixXd& e_sigma_inv, std::int64_t j) {
  const NeighborGraph& g = ctx.data().graph;
  const std::int64_t p = vs.p();
  const int deg = g.degree(j);
  Eigen::MatrixXd prec = static_cast<double>(deg) * e_sigma_inv;
  for (std::int64_t c = 0; c < p; ++c) prec(c, c) += 2.0 * lambda_jj(vs.xi(j, c));
  Eigen::VectorXd nb_sum = Eigen::VectorXd::Zero(p);
  for (std::int32_t e = g.offsets[j]; e < g.offsets[j + 1]; ++e)
    nb_sum += vs.m_theta.row(g.neighbors[e]).transpose();
  const Eigen::VectorXd rhs =
      e_sigma_inv * nb_sum + (vs.q_gamma.row(j).transpose().array() - 0.5).matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw numeric_error("cavi: theta precision not positive definite");
  vs.S_theta[j] = llt.solve(Eigen::MatrixXd::Identity(p, p));
  vs.m_theta.row(j) = llt.solve(rhs).transpose();
  for (std::int64_t c = 0; c < p; ++c)
    vs.xi(j, c) = std::sqrt(vs.m_theta(j, c) * vs.m_theta(j, c) + vs.S_theta[j](c, c));
}

inline void update_wishart(VariationalState& vs, const ViContext& ctx,
                           const Hyperparams& hp) {
  const Dataset& d = ctx.data();
  const std::int64_t m = d.m(), p = d.p();
  Eigen::MatrixXd pairs = Eigen::MatrixXd::Zero(p, p);
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int32_t e = d.graph.offsets[j]; e < d.graph.offsets[j + 1]; ++e) {
      const std::int32_t r = d.graph.neighbors[e];
      if (r <= j) continue;
      const Eigen::VectorXd diff = vs.m_theta.row(j) - vs.m_theta.row(r);
      pairs.noalias() += diff * diff.transpose();
      pairs += vs.S_theta[j] + vs.S_theta[r];
    }
  }
  vs.wishart_df = hp.resolved_wishart_df(p) + static_cast<double>(m - d.graph.n_components);
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(p, p) + pairs;
  Eigen::LLT<Eigen::MatrixXd> llt(v);
  if (llt.info() != Eigen::Success)
    throw numeric_error("cavi: wishart scale not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  vs.wishart_scale = 0.5 * (inv + inv.transpose());
}

inline void cavi_sweep(VariationalState& vs, const ViContext& ctx,
                       const Hyperparams& hp, const ViOptions& opt) {
  const std::int64_t m = vs.m();
  parallel_for(static_cast<std::size_t>(m), opt.workers, [&](std::size_t j) {
    const ZStats zs = voxel_zstats(vs, ctx, static_cast<std::int64_t>(j));
    update_beta_voxel(vs, ctx, hp, opt, j, zs);
    update_beta0_voxel(vs, ctx, hp, j, zs);
    update_gamma_voxel(vs, ctx, hp, opt, j);
  });
  const Eigen::MatrixXd esi = vs.e_sigma_inv();
  for (int color = 0; color < 2; ++color) {
    const auto& idx = ctx.color_index(color);
    parallel_for(idx.size(), opt.workers,
                 [&](std::size_t k) { update_theta_voxel(vs, ctx, esi, idx[k]); });
  }
  update_wishart(vs, ctx, hp);
}

inline double bernoulli_entropy(double q) {
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (q < 1.0) h -= (1.0 - q) * std::log1p(-q);
  return h;
}

inline double compute_elbo(const VariationalState& vs, const ViContext& ctx,
                           const Hyperparams& hp, const ViOptions& opt) {
  const Dataset& d = ctx.data();
  const std::int64_t m = d.m(), p = d.p();
  const double nu = hp.resolved_wishart_df(p);
  const Eigen::MatrixXd esi = vs.e_sigma_inv();
  const double log_nu1 = std::log(hp.nu1), log_nu0 = std::log(hp.nu0);

  std::vector<double> part(m, 0.0);
  parallel_for(static_cast<std::size_t>(m), opt.workers, [&](std::size_t j) {
    double acc = 0.0;

    // Collapsed likelihood: sum_i w_i [log Phi(+-eta) - (x'Sx + v0)/2].
    const double m0 = vs.m_beta0[j];
    if (ctx.compressed()) {
      for (int q = 0; q < ctx.n_patterns(); ++q) {
        const double pw = ctx.pat_w()[q];
        if (pw == 0.0) continue;
        const double eta = ctx.pat_x().row(q).dot(vs.m_beta.row(j)) + m0;
        const double wy1 = ctx.wy()(j, q);
        acc += wy1 * log_norm_cdf(eta) + (pw - wy1) * log_norm_cdf(-eta);
        acc -= 0.5 * pw * ctx.pat_x().row(q).dot(vs.S_beta[j] * ctx.pat_x().row(q).transpose());
      }
    } else {
      const Eigen::VectorXd eta = d.X * vs.m_beta.row(j).transpose() +
                                  Eigen::VectorXd::Constant(d.n(), m0);
      const std::uint8_t* yj = d.y_col(j);
      for (std::int64_t i = 0; i < d.n(); ++i) {
        const double wi = ctx.weights()[i];
        if (wi == 0.0) continue;
        acc += wi * (yj[i] ? log_norm_cdf(eta[i]) : log_norm_cdf(-eta[i]));
        acc -= 0.5 * wi * d.X.row(i).dot(vs.S_beta[j] * d.X.row(i).transpose());
      }
    }
    acc -= 0.5 * ctx.sum_w() * vs.v_beta0[j];

    // Coefficient prior and entropy.
    for (std::int64_t c = 0; c < p; ++c) {
      const double q = vs.q_gamma(j, c);
      const double mu = ctx.shift(j, c);
      const double Spp = vs.S_beta[j](c, c);
      const double mc = vs.m_beta(j, c);
      acc -= 0.5 * (kLog2Pi + q * log_nu1 + (1.0 - q) * log_nu0);
      if (opt.jitter_spike_only) {
        acc -= 0.5 * (q * (mc * mc + Spp) / hp.nu1 +
                      (1.0 - q) * ((mc - mu) * (mc - mu) + Spp) / hp.nu0);
      } else {
        const double dev2 = (mc - mu) * (mc - mu) + Spp;
        acc -= 0.5 * dev2 * (q / hp.nu1 + (1.0 - q) / hp.nu0);
      }
    }
    acc += 0.5 * (log_det_spd(vs.S_beta[j], "elbo S_beta") + p * (1.0 + kLog2Pi));

    // Intercept prior and entropy.
    acc -= 0.5 * (std::log(2.0 * M_PI * hp.sigma0_sq) +
                  (vs.m_beta0[j] * vs.m_beta0[j] + vs.v_beta0[j]) / hp.sigma0_sq);
    acc += 0.5 * (std::log(vs.v_beta0[j]) + 1.0 + kLog2Pi);

    // Inclusion terms under the JJ bound, plus gamma entropy.
    for (std::int64_t c = 0; c < p; ++c) {
      const double q = vs.q_gamma(j, c);
      const double mt = vs.m_theta(j, c);
      const double xi = vs.xi(j, c);
      const double e_th2 = mt * mt + vs.S_theta[j](c, c);
      acc += q * mt + std::log(sigmoid(xi)) - 0.5 * (mt + xi) -
             lambda_jj(xi) * (e_th2 - xi * xi);
      acc += bernoulli_entropy(q);
    }
    acc += 0.5 * (log_det_spd(vs.S_theta[j], "elbo S_theta") + p * (1.0 + kLog2Pi));

    // Pairwise MRF quadratic, each unordered pair charged to its low voxel.
    const NeighborGraph& g = d.graph;
    for (std::int32_t e = g.offsets[j]; e < g.offsets[j + 1]; ++e) {
      const std::int32_t r = g.neighbors[e];
      if (r <= static_cast<std::int64_t>(j)) continue;
      const Eigen::VectorXd diff = vs.m_theta.row(j) - vs.m_theta.row(r);
      acc -= 0.5 * (diff.dot(esi * diff) + (esi * (vs.S_theta[j] + vs.S_theta[r])).trace());
    }
    part[j] = acc;
  });
  double elbo = 0.0;
  for (std::int64_t j = 0; j < m; ++j) elbo += part[j];

  // MRF log-normalizer at rank M - G, then the Wishart prior and entropy.
  double e_logdet = p * std::log(2.0) + log_det_spd(vs.wishart_scale, "elbo wishart scale");
  for (std::int64_t i = 1; i <= p; ++i)
    e_logdet += digamma(0.5 * (vs.wishart_df + 1.0 - static_cast<double>(i)));
  const double rank = static_cast<double>(m - d.graph.n_components);
  elbo += 0.5 * rank * e_logdet;

  const double ldv = log_det_spd(vs.wishart_scale, "elbo wishart scale");
  const double df = vs.wishart_df;
  elbo += 0.5 * (nu - p - 1) * e_logdet - 0.5 * df * vs.wishart_scale.trace() -
          0.5 * nu * p * std::log(2.0) - log_multigamma(static_cast<int>(p), 0.5 * nu);
  elbo -= 0.5 * (df - p - 1) * e_logdet - 0.5 * df * p - 0.5 * df * p * std::log(2.0) -
          0.5 * df * ldv - log_multigamma(static_cast<int>(p), 0.5 * df);
  return elbo;
}

// Starting point: Firth estimates for the coefficient means, flat inclusion,
// a constant theta field at the logit of the voxel fraction with Firth
// p < 0.05 (degenerate voxels excluded), identity expected precision.
inline VariationalState make_initial_state(const Dataset& d, const Hyperparams& hp,
                                           const FirthVoxelwise* firth) {
  const std::int64_t m = d.m(), p = d.p();
  VariationalState vs;
  vs.m_beta = Eigen::MatrixXd::Zero(m, p);
  vs.m_beta0 = Eigen::VectorXd::Zero(m);
  vs.v_beta0 = Eigen::VectorXd::Constant(m, 1.0);
  vs.q_gamma = Eigen::MatrixXd::Constant(m, p, 0.5);
  vs.m_theta = Eigen::MatrixXd::Zero(m, p);
  vs.xi = Eigen::MatrixXd::Constant(m, p, 1.0);
  vs.S_beta.assign(m, hp.nu1 * Eigen::MatrixXd::Identity(p, p));
  vs.S_theta.assign(m, Eigen::MatrixXd::Identity(p, p));
  const double df0 = hp.resolved_wishart_df(p) + static_cast<double>(m - d.graph.n_components);
  vs.wishart_df = df0;
  vs.wishart_scale = Eigen::MatrixXd::Identity(p, p) / df0;  // E[SigmaInv] = I
  if (firth) {
    vs.m_beta0 = firth->coef.col(0);
    vs.m_beta = firth->coef.rightCols(p);
    for (std::int64_t c = 0; c < p; ++c) {
      std::int64_t used = 0, active = 0;
      for (std::int64_t j = 0; j < m; ++j) {
        if (firth->degenerate[j]) continue;
        ++used;
        if (firth->pvalue(j, c + 1) < 0.05) ++active;
      }
      double frac = used > 0 ? static_cast<double>(active) / static_cast<double>(used) : 0.5;
      frac = std::min(1.0 - 1e-8, std::max(1e-8, frac));
      const double t = std::min(8.0, std::max(-8.0, logit(frac)));
      vs.m_theta.col(c).setConstant(t);
    }
  }
  return vs;
}

struct CaviResult {
  std::vector<double> elbo_trace;  // entry 0 is the pre-sweep objective
  int sweeps = 0;
  bool converged = false;
};

inline CaviResult run_cavi(VariationalState& vs, const ViContext& ctx,
                           const Hyperparams& hp, const ViOptions& opt) {
  CaviResult res;
  res.elbo_trace.push_back(compute_elbo(vs, ctx, hp, opt));
  for (int s = 0; s < opt.max_sweeps; ++s) {
    cavi_sweep(vs, ctx, hp, opt);
    ++res.sweeps;
    const double e = compute_elbo(vs, ctx, hp, opt);
    res.elbo_trace.push_back(e);
    if (!std::isfinite(e)) throw numeric_error("cavi: objective became non-finite");
    if (std::fabs(e - res.elbo_trace[res.elbo_trace.size() - 2]) < opt.epsilon) {
      res.converged = true;
      break;
    }
  }
  return res;
}

inline Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> threshold_inclusion(
    const VariationalState& vs) {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> act(vs.m(), vs.p());
  for (std::int64_t j = 0; j < vs.m(); ++j)
    for (std::int64_t c = 0; c < vs.p(); ++c)
      act(j, c) = vs.q_gamma(j, c) > 0.5 ? 1 : 0;  // median probability model
  return act;
}

// ------------------------------------------------------------ state on disk

inline void write_state(const std::string& path, const VariationalState& vs) {
  detail::BinWriter w(path);
  w.bytes("BLST", 4);
  w.u32(1u);
  const std::int64_t m = vs.m(), p = vs.p();
  w.u32(static_cast<std::uint32_t>(m));
  w.u32(static_cast<std::uint32_t>(p));
  auto mat = [&](const Eigen::MatrixXd& a) {
    for (std::int64_t r = 0; r < a.rows(); ++r)
      for (std::int64_t c = 0; c < a.cols(); ++c) w.f64(a(r, c));
  };
  mat(vs.m_beta);
  for (const auto& s : vs.S_beta) mat(s);
  mat(vs.m_beta0);
  mat(vs.v_beta0);
  mat(vs.q_gamma);
  mat(vs.m_theta);
  for (const auto& s : vs.S_theta) mat(s);
  mat(vs.xi);
  w.f64(vs.wishart_df);
  mat(vs.wishart_scale);
  w.close_with_checksum();
}

inline VariationalState read_state(const std::string& path) {
  detail::BinReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "BLST", 4) != 0) throw config_error("not a state file: " + path);
  if (r.u32() != 1u) throw config_error("unsupported state version: " + path);
  const std::int64_t m = r.u32(), p = r.u32();
  VariationalState vs;
  auto mat = [&](Eigen::MatrixXd& a, std::int64_t rows, std::int64_t cols) {
    a.resize(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i)
      for (std::int64_t c = 0; c < cols; ++c) a(i, c) = r.f64();
  };
  Eigen::MatrixXd tmp;
  mat(vs.m_beta, m, p);
  vs.S_beta.resize(m);
  for (auto& s : vs.S_beta) mat(s, p, p);
  mat(tmp, m, 1);
  vs.m_beta0 = tmp.col(0);
  mat(tmp, m, 1);
  vs.v_beta0 = tmp.col(0);
  mat(vs.q_gamma, m, p);
  mat(vs.m_theta, m, p);
  vs.S_theta.resize(m);
  for (auto& s : vs.S_theta) mat(s, p, p);
  mat(vs.xi, m, p);
  vs.wishart_df = r.f64();
  mat(vs.wishart_scale, p, p);
  const std::uint64_t expect = r.checksum_so_far();
  if (r.u64() != expect) throw config_error("state checksum mismatch: " + path);
  if (r.remaining() != 0) throw config_error("trailing bytes in state file: " + path);
  return vs;
}

}  // namespace bless
