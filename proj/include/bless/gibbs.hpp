#pragma once

// Full Gibbs sampler for the spatial spike-and-slab probit model, used as
// the reference posterior. Scan order per iteration: for every voxel draw
// the latent normals, the coefficients, the intercept and the inclusion
// indicators; then the sparsity field by checkerboard color with
// Polya-Gamma augmentation (random-walk Metropolis behind a flag for
// cross-checking); then the field precision from its Wishart conditional.
//
// All randomness is drawn from streams keyed by (seed, phase, iteration,
// voxel), so chains are reproducible and independent of the worker count.
// The latent normals are never stored: each voxel accumulates the per-pattern
// sufficient statistics the coefficient draw needs.

#include <string>
#include <vector>

#include "bless/io.hpp"
#include "bless/model.hpp"
#include "bless/polya_gamma.hpp"
#include "bless/rng.hpp"
#include "bless/vi.hpp"

namespace bless {

struct GibbsConfig {
  int iterations = 15000;
  int burn_in = 5000;
  int thin = 1;
  std::uint64_t seed = 1;
  bool save_draws = false;   // retain the coefficient chain (memory heavy)
  bool theta_mh = false;     // Metropolis fallback for the sparsity field
  double mh_step = 0.25;
  int workers = 1;
};

struct ChainOutput {
  int retained = 0;
  Eigen::MatrixXd mean, sd, tstat;  // M x P over retained draws
  Eigen::VectorXd mean0, sd0;       // intercept chain summaries
  Eigen::MatrixXd gamma_mean;       // M x P inclusion frequencies
  Eigen::MatrixXd theta_mean;       // M x P field means
  Eigen::MatrixXd sigma_mean;       // P x P mean of the field precision draws
  Ensemble draws;                   // retained x M x P when save_draws
  std::vector<std::uint8_t> gamma_draws;  // retained x M x P alongside draws
  bool has_draws = false;
  double mh_accept = 0.0;           // filled when theta_mh is on
};

namespace detail {

// One truncated-normal draw by inverse CDF given the precomputed one-sided
// mass cap = Phi(mean) (positive side) or Phi(-mean) (negative side).
inline double tn_draw(double mean, double cap, bool positive, RngStream& rs) {
  double p = rs.uniform() * cap;
  if (p < 1e-300) p = 1e-300;
  const double q = norm_quantile(p);
  return positive ? mean - q : mean + q;
}

}  // namespace detail

inline ModelState state_from_vi(const VariationalState& vs) {
  ModelState s;
  s.beta = vs.m_beta;
  s.beta0 = vs.m_beta0;
  s.gamma = Eigen::MatrixXd(vs.m(), vs.p());
  for (std::int64_t j = 0; j < vs.m(); ++j)
    for (std::int64_t c = 0; c < vs.p(); ++c)
      s.gamma(j, c) = vs.q_gamma(j, c) > 0.5 ? 1.0 : 0.0;
  s.theta = vs.m_theta;
  s.sigma_inv = vs.e_sigma_inv();
  return s;
}

inline ModelState default_gibbs_init(const Dataset& d) {
  ModelState s;
  s.beta = Eigen::MatrixXd::Zero(d.m(), d.p());
  s.beta0 = Eigen::VectorXd::Zero(d.m());
  s.gamma = Eigen::MatrixXd::Ones(d.m(), d.p());
  s.theta = Eigen::MatrixXd::Zero(d.m(), d.p());
  s.sigma_inv = Eigen::MatrixXd::Identity(d.p(), d.p());
  return s;
}

inline ChainOutput run_gibbs(const Dataset& d, const Hyperparams& hp,
                             const GibbsConfig& cfg, ModelState state) {
  if (cfg.iterations < 1 || cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
    throw config_error("gibbs: need 0 <= burn_in < iterations");
  if (cfg.thin < 1) throw config_error("gibbs: thin must be positive");
  const std::int64_t m = d.m(), p = d.p(), n = d.n();
  const ViContext ctx(d);  // pattern tables with unit weights
  const double logit_prior = 0.5 * std::log(hp.nu0 / hp.nu1);
  const double gam_coef = 0.5 / hp.nu0 - 0.5 / hp.nu1;
  const double prec_b0 = static_cast<double>(n) + 1.0 / hp.sigma0_sq;
  const double nu = hp.resolved_wishart_df(p);
  const int npat = ctx.compressed() ? ctx.n_patterns() : 0;

  const int retained_target = (cfg.iterations - cfg.burn_in + cfg.thin - 1) / cfg.thin;
  ChainOutput out;
  out.mean = Eigen::MatrixXd::Zero(m, p);
  out.sd = Eigen::MatrixXd::Zero(m, p);
  out.gamma_mean = Eigen::MatrixXd::Zero(m, p);
  out.theta_mean = Eigen::MatrixXd::Zero(m, p);
  out.sigma_mean = Eigen::MatrixXd::Zero(p, p);
  out.mean0 = Eigen::VectorXd::Zero(m);
  out.sd0 = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd sum_b = Eigen::MatrixXd::Zero(m, p);
  Eigen::MatrixXd ssq_b = Eigen::MatrixXd::Zero(m, p);
  Eigen::VectorXd sum_b0 = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd ssq_b0 = Eigen::VectorXd::Zero(m);
  if (cfg.save_draws) {
    out.draws.B = static_cast<std::uint32_t>(retained_target);
    out.draws.M = static_cast<std::uint32_t>(m);
    out.draws.P = static_cast<std::uint32_t>(p);
    out.draws.values.assign(static_cast<std::size_t>(retained_target) * m * p, 0.0);
    out.gamma_draws.assign(static_cast<std::size_t>(retained_target) * m * p, 0);
    out.has_draws = true;
  }

  std::vector<double> mh_accept(m, 0.0);
  std::vector<std::string> fail(m);

  for (int it = 0; it < cfg.iterations; ++it) {
    // latents, coefficients, intercept, indicators
    parallel_for(static_cast<std::size_t>(m), cfg.workers, [&](std::size_t jz) {
      const std::int64_t j = static_cast<std::int64_t>(jz);
      try {
        RngStream rs(cfg.seed, StreamKind::GibbsVoxel, static_cast<std::uint32_t>(it),
                     static_cast<std::uint32_t>(j));
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
        double sz_tot = 0.0;
        if (ctx.compressed()) {
          for (int q = 0; q < npat; ++q) {
            const double cnt = ctx.pat_w()[q];
            if (cnt == 0.0) continue;
            const double eta = ctx.pat_x().row(q).dot(state.beta.row(j)) + state.beta0[j];
            const long n1 = std::lround(ctx.wy()(j, q));
            const long n0 = std::lround(cnt) - n1;
            double sz = 0.0;
            if (n1 > 0) {
              const double cap = norm_cdf(eta);
              for (long k = 0; k < n1; ++k) sz += detail::tn_draw(eta, cap, true, rs);
            }
            if (n0 > 0) {
              const double cap = norm_cdf(-eta);
              for (long k = 0; k < n0; ++k) sz += detail::tn_draw(eta, cap, false, rs);
            }
            sz_tot += sz;
            rhs += (sz - cnt * state.beta0[j]) * ctx.pat_x().row(q).transpose();
          }
        } else {
          const std::uint8_t* yj = d.y_col(j);
          for (std::int64_t i = 0; i < n; ++i) {
            const double eta = d.X.row(i).dot(state.beta.row(j)) + state.beta0[j];
            const bool pos = yj[i] != 0;
            const double cap = norm_cdf(pos ? eta : -eta);
            const double z = detail::tn_draw(eta, cap, pos, rs);
            sz_tot += z;
            rhs += (z - state.beta0[j]) * d.X.row(i).transpose();
          }
        }

        Eigen::MatrixXd prec = ctx.xtwx();
        for (std::int64_t c = 0; c < p; ++c)
          prec(c, c) += 1.0 / (state.gamma(j, c) > 0.5 ? hp.nu1 : hp.nu0);
        Eigen::LLT<Eigen::MatrixXd> llt(prec);
        if (llt.info() != Eigen::Success)
          throw numeric_error("coefficient precision not positive definite");
        Eigen::VectorXd eps(p);
        for (std::int64_t c = 0; c < p; ++c) eps[c] = rs.normal();
        state.beta.row(j) =
            (llt.solve(rhs) + llt.matrixU().solve(eps)).transpose();

        const double mean0 = (sz_tot - ctx.xw().dot(state.beta.row(j))) / prec_b0;
        state.beta0[j] = mean0 + rs.normal() / std::sqrt(prec_b0);

        for (std::int64_t c = 0; c < p; ++c) {
          const double b = state.beta(j, c);
          const double lo = state.theta(j, c) + logit_prior + b * b * gam_coef;
          state.gamma(j, c) = rs.uniform() < sigmoid(lo) ? 1.0 : 0.0;
        }
      } catch (const numeric_error& e) {
        fail[j] = "iteration " + std::to_string(it) + " voxel " + std::to_string(j) +
                  ": " + e.what();
      }
    });
    for (std::int64_t j = 0; j < m; ++j)
      if (!fail[j].empty()) throw numeric_error("gibbs: " + fail[j]);

    // sparsity field by color class
    for (int color = 0; color < 2; ++color) {
      const auto& idx = ctx.color_index(color);
      parallel_for(idx.size(), cfg.workers, [&](std::size_t k) {
        const std::int64_t j = idx[k];
        try {
          RngStream rs(cfg.seed, StreamKind::GibbsTheta, static_cast<std::uint32_t>(it),
                       static_cast<std::uint32_t>(j));
          const NeighborGraph& g = d.graph;
          const int deg = g.degree(j);
          Eigen::VectorXd nb_sum = Eigen::VectorXd::Zero(p);
          for (std::int32_t e = g.offsets[j]; e < g.offsets[j + 1]; ++e)
            nb_sum += state.theta.row(g.neighbors[e]).transpose();
          if (cfg.theta_mh) {
            Eigen::VectorXd cur = state.theta.row(j);
            Eigen::VectorXd prop = cur;
            for (std::int64_t c = 0; c < p; ++c) prop[c] += cfg.mh_step * rs.normal();
            auto logpost = [&](const Eigen::VectorXd& th) {
              double lp = 0.0;
              for (std::int64_t c = 0; c < p; ++c)
                lp += state.gamma(j, c) * th[c] - log1pexp(th[c]);
              lp -= 0.5 * deg * th.dot(state.sigma_inv * th);
              lp += th.dot(state.sigma_inv * nb_sum);
              return lp;
            };
            if (std::log(rs.uniform()) < logpost(prop) - logpost(cur)) {
              state.theta.row(j) = prop.transpose();
              mh_accept[j] += 1.0;
            }
          } else {
            Eigen::MatrixXd prec = static_cast<double>(deg) * state.sigma_inv;
            for (std::int64_t c = 0; c < p; ++c)
              prec(c, c) += pg_draw(state.theta(j, c), rs);
            const Eigen::VectorXd b =
                state.sigma_inv * nb_sum +
                (state.gamma.row(j).transpose().array() - 0.5).matrix();
            Eigen::LLT<Eigen::MatrixXd> llt(prec);
            if (llt.info() != Eigen::Success)
              throw numeric_error("field precision not positive definite");
            Eigen::VectorXd eps(p);
            for (std::int64_t c = 0; c < p; ++c) eps[c] = rs.normal();
            state.theta.row(j) = (llt.solve(b) + llt.matrixU().solve(eps)).transpose();
          }
        } catch (const numeric_error& e) {
          fail[j] = "iteration " + std::to_string(it) + " voxel " + std::to_string(j) +
                    ": " + e.what();
        }
      });
      for (std::int64_t j = 0; j < m; ++j)
        if (!fail[j].empty()) throw numeric_error("gibbs: " + fail[j]);
    }

    // field precision: Wishart draw by Bartlett decomposition
    {
      RngStream rs(cfg.seed, StreamKind::GibbsGlobal, static_cast<std::uint32_t>(it), 0);
      Eigen::MatrixXd pairs = Eigen::MatrixXd::Zero(p, p);
      for (std::int64_t j = 0; j < m; ++j)
        for (std::int32_t e = d.graph.offsets[j]; e < d.graph.offsets[j + 1]; ++e) {
          const std::int32_t r = d.graph.neighbors[e];
          if (r <= j) continue;
          const Eigen::VectorXd diff = state.theta.row(j) - state.theta.row(r);
          pairs.noalias() += diff * diff.transpose();
        }
      const double df = nu + static_cast<double>(m - d.graph.n_components);
      Eigen::MatrixXd v = Eigen::MatrixXd::Identity(p, p) + pairs;
      Eigen::LLT<Eigen::MatrixXd> vllt(v);
      if (vllt.info() != Eigen::Success)
        throw numeric_error("gibbs: wishart scale not positive definite at iteration " +
                            std::to_string(it));
      // scale = v^{-1} = (L^-T)(L^-1); its Cholesky factor is L^-T reordered,
      // so draw W = C A A' C' with C = chol(v^{-1})
      Eigen::MatrixXd vinv = vllt.solve(Eigen::MatrixXd::Identity(p, p));
      vinv = 0.5 * (vinv + vinv.transpose());
      Eigen::LLT<Eigen::MatrixXd> sllt(vinv);
      if (sllt.info() != Eigen::Success)
        throw numeric_error("gibbs: wishart scale inverse not positive definite");
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
      for (std::int64_t i = 0; i < p; ++i) {
        a(i, i) = std::sqrt(rs.chi_square(df - static_cast<double>(i)));
        for (std::int64_t c = 0; c < i; ++c) a(i, c) = rs.normal();
      }
      const Eigen::MatrixXd ca = sllt.matrixL() * a;
      state.sigma_inv = ca * ca.transpose();
    }

    // accumulate retained-draw summaries
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
      const int slot = out.retained++;
      sum_b += state.beta;
      ssq_b += state.beta.cwiseProduct(state.beta);
      sum_b0 += state.beta0;
      ssq_b0 += state.beta0.cwiseProduct(state.beta0);
      out.gamma_mean += state.gamma;
      out.theta_mean += state.theta;
      out.sigma_mean += state.sigma_inv;
      if (cfg.save_draws)
        for (std::int64_t j = 0; j < m; ++j)
          for (std::int64_t c = 0; c < p; ++c) {
            out.draws.at(slot, j, c) = state.beta(j, c);
            out.gamma_draws[(static_cast<std::size_t>(slot) * m + j) * p + c] =
                state.gamma(j, c) > 0.5 ? 1 : 0;
          }
    }
  }

  const double r = static_cast<double>(out.retained);
  out.mean = sum_b / r;
  out.mean0 = sum_b0 / r;
  out.gamma_mean /= r;
  out.theta_mean /= r;
  out.sigma_mean /= r;
  out.sd = (ssq_b / r - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0).cwiseSqrt();
  out.sd0 = (ssq_b0 / r - out.mean0.cwiseProduct(out.mean0)).cwiseMax(0.0).cwiseSqrt();
  out.tstat = out.mean.cwiseQuotient(out.sd);
  double acc = 0.0;
  for (std::int64_t j = 0; j < m; ++j) acc += mh_accept[j];
  out.mh_accept = cfg.theta_mh ? acc / (static_cast<double>(m) * cfg.iterations) : 0.0;
  return out;
}

// Effective sample size by the initial-positive-sequence rule: sum adjacent
// autocovariance pairs until a pair goes non-positive.
inline double ess_ips(const double* x, int n) {
  if (n < 2) return n;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += x[i];
  mean /= n;
  auto acov = [&](int lag) {
    double s = 0.0;
    for (int i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / n;
  };
  const double c0 = acov(0);
  if (c0 <= 0.0) return static_cast<double>(n);  // constant chain
  double sum = 0.0;
  for (int k = 0; 2 * k + 1 < n; ++k) {
    const double pair = acov(2 * k) + acov(2 * k + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double var = 2.0 * sum - c0;
  if (var <= c0) return static_cast<double>(n);
  return std::min(static_cast<double>(n), n * c0 / var);
}

struct ChainSummary {
  Eigen::MatrixXd mean, sd, tstat, ess;  // M x P
};

inline ChainSummary chain_summary(const Ensemble& draws) {
  if (draws.B < 10) throw config_error("chain summary needs at least 10 retained draws");
  const std::int64_t m = draws.M, p = draws.P, b = draws.B;
  ChainSummary s;
  s.mean = Eigen::MatrixXd::Zero(m, p);
  s.sd = Eigen::MatrixXd::Zero(m, p);
  s.tstat = Eigen::MatrixXd::Zero(m, p);
  s.ess = Eigen::MatrixXd::Zero(m, p);
  std::vector<double> chain(b);
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int64_t c = 0; c < p; ++c) {
      double sum = 0.0;
      for (std::int64_t k = 0; k < b; ++k) {
        chain[k] = draws.at(k, j, c);
        sum += chain[k];
      }
      const double mu = sum / b;
      double ss = 0.0;
      for (std::int64_t k = 0; k < b; ++k) ss += (chain[k] - mu) * (chain[k] - mu);
      s.mean(j, c) = mu;
      s.sd(j, c) = std::sqrt(ss / b);
      s.tstat(j, c) = mu / s.sd(j, c);
      s.ess(j, c) = ess_ips(chain.data(), static_cast<int>(b));
    }
  }
  return s;
}

}  // namespace bless
