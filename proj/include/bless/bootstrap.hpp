#pragma once

// Weighted-likelihood bootstrap around the variational fit. Each replicate
// reweights subjects by a scaled Dirichlet draw, recenters the coefficient
// prior on Gaussian mean shifts, and re-optimizes every variational factor
// from the warm start; the collection of per-replicate coefficient means is
// treated as an approximate posterior sample.
//
// Replicate b's randomness is keyed entirely by (seed, b), so worker count
// and scheduling cannot change any output.

#include <string>
#include <vector>

#include "bless/io.hpp"
#include "bless/rng.hpp"
#include "bless/vi.hpp"

namespace bless {

struct BootstrapConfig {
  int replicates = 1000;
  double alpha = 1.0;             // Dirichlet concentration
  std::uint64_t seed = 1;
  double nu0_target = 0.0;        // spike variance selected by the annealing path
  double epsilon = 0.0;           // 0 = inherit the plain VI tolerance
  double max_failure_fraction = 0.10;
};

inline Eigen::VectorXd draw_weights(std::uint64_t seed, std::int64_t b, std::int64_t n,
                                    double alpha) {
  if (alpha <= 0.0) throw config_error("bootstrap: alpha must be positive");
  RngStream rs(seed, StreamKind::BootWeights, static_cast<std::uint32_t>(b), 0);
  Eigen::VectorXd w(n);
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    w[i] = rs.gamma(alpha);
    sum += w[i];
  }
  if (!(sum > 0.0)) throw numeric_error("bootstrap: degenerate Dirichlet draw");
  w *= static_cast<double>(n) / sum;
  return w;
}

inline Eigen::MatrixXd draw_shifts(std::uint64_t seed, std::int64_t b, std::int64_t m,
                                   std::int64_t p, double nu0) {
  if (!(nu0 > 0.0)) throw config_error("bootstrap: shift variance must be positive");
  RngStream rs(seed, StreamKind::BootShifts, static_cast<std::uint32_t>(b), 0);
  const double sd = std::sqrt(nu0);
  Eigen::MatrixXd mu(m, p);
  for (std::int64_t j = 0; j < m; ++j)
    for (std::int64_t c = 0; c < p; ++c) mu(j, c) = sd * rs.normal();
  return mu;
}

// One replicate with explicit weights and shifts; the keyed wrapper below is
// what the driver uses. Returns the converged coefficient means.
inline Eigen::MatrixXd fit_replicate(const Dataset& d, const Hyperparams& hp,
                                     const ViOptions& opt,
                                     const VariationalState& warm,
                                     Eigen::VectorXd weights, Eigen::MatrixXd shifts) {
  ViContext ctx(d, std::move(weights), std::move(shifts));
  VariationalState vs = warm;
  run_cavi(vs, ctx, hp, opt);
  return vs.m_beta;
}

inline Eigen::MatrixXd fit_replicate(std::int64_t b, const Dataset& d,
                                     const Hyperparams& hp_base, const ViOptions& opt_base,
                                     const BootstrapConfig& cfg,
                                     const VariationalState& warm) {
  Hyperparams hp = hp_base;
  if (cfg.nu0_target > 0.0) hp.nu0 = cfg.nu0_target;
  ViOptions opt = opt_base;
  if (cfg.epsilon > 0.0) opt.epsilon = cfg.epsilon;
  opt.workers = 1;  // parallelism lives at the replicate level
  try {
    return fit_replicate(d, hp, opt, warm,
                         draw_weights(cfg.seed, b, d.n(), cfg.alpha),
                         draw_shifts(cfg.seed, b, d.m(), d.p(), hp.nu0));
  } catch (const numeric_error& e) {
    throw numeric_error("replicate " + std::to_string(b) + ": " + e.what());
  }
}

struct PosteriorEnsemble {
  Ensemble samples;               // successful replicates, in replicate order
  Eigen::MatrixXd mean, sd, tstat;  // M x P; tstat = mean/sd with IEEE semantics
  std::vector<std::int64_t> failed;  // replicate ids, for the run log
};

inline PosteriorEnsemble run_bootstrap(const Dataset& d, const Hyperparams& hp_base,
                                       const ViOptions& opt, const BootstrapConfig& cfg,
                                       const VariationalState& warm) {
  if (cfg.replicates < 1) throw config_error("bootstrap: need at least one replicate");
  const std::int64_t m = d.m(), p = d.p();
  const int B = cfg.replicates;
  std::vector<Eigen::MatrixXd> draws(B);
  std::vector<std::uint8_t> ok(B, 0);
  std::vector<std::string> why(B);
  parallel_for(static_cast<std::size_t>(B), opt.workers, [&](std::size_t b) {
    try {
      draws[b] = fit_replicate(static_cast<std::int64_t>(b), d, hp_base, opt, cfg, warm);
      ok[b] = 1;
    } catch (const numeric_error& e) {
      why[b] = e.what();
    }
  });

  PosteriorEnsemble out;
  int good = 0;
  for (int b = 0; b < B; ++b) {
    if (ok[b]) ++good;
    else out.failed.push_back(b);
  }
  if (static_cast<double>(B - good) > cfg.max_failure_fraction * B) {
    std::string msg = "bootstrap: too many failed replicates (" +
                      std::to_string(B - good) + " of " + std::to_string(B) + ")";
    for (int b = 0; b < B && !ok[b]; ++b) msg += "; first: " + why[b];
    throw numeric_error(msg);
  }
  if (good == 0) throw numeric_error("bootstrap: no replicate converged");

  out.samples.B = static_cast<std::uint32_t>(good);
  out.samples.M = static_cast<std::uint32_t>(m);
  out.samples.P = static_cast<std::uint32_t>(p);
  out.samples.values.assign(static_cast<std::size_t>(good) * m * p, 0.0);
  int slot = 0;
  for (int b = 0; b < B; ++b) {
    if (!ok[b]) continue;
    for (std::int64_t j = 0; j < m; ++j)
      for (std::int64_t c = 0; c < p; ++c) out.samples.at(slot, j, c) = draws[b](j, c);
    ++slot;
  }

  out.mean = Eigen::MatrixXd::Zero(m, p);
  out.sd = Eigen::MatrixXd::Zero(m, p);
  out.tstat = Eigen::MatrixXd::Zero(m, p);
  for (std::int64_t j = 0; j < m; ++j) {
    for (std::int64_t c = 0; c < p; ++c) {
      double s = 0.0;
      for (int b = 0; b < good; ++b) s += out.samples.at(b, j, c);
      const double mu = s / good;
      double ss = 0.0;
      for (int b = 0; b < good; ++b) {
        const double dev = out.samples.at(b, j, c) - mu;
        ss += dev * dev;
      }
      out.mean(j, c) = mu;
      out.sd(j, c) = std::sqrt(ss / good);
      out.tstat(j, c) = mu / out.sd(j, c);
    }
  }
  return out;
}

}  // namespace bless
