#pragma once

// Backwards annealing of the spike variance ("dynamic posterior exploration").
// A grid of nu0 values, largest first, is swept with warm starts: the fit at
// one spike variance initializes the next, and the answer is the state at the
// smallest nu0. Along the way each step records the thresholded active set,
// the coefficient means (regularization path), and a lower bound on the log
// posterior mass of the thresholded model, whose flattening across steps is
// the practical sign that the path has stabilized.

#include <string>
#include <vector>

#include "bless/io.hpp"
#include "bless/vi.hpp"

namespace bless {

inline std::vector<double> nu0_grid(double log_min, double log_max, int steps) {
  if (steps < 1) throw config_error("nu0 grid needs at least one step");
  if (log_min > log_max) throw config_error("nu0 grid: log_min above log_max");
  std::vector<double> g(steps);
  if (steps == 1) {
    g[0] = std::exp(log_min);
    return g;
  }
  for (int k = 0; k < steps; ++k) {
    const double t = log_max + (log_min - log_max) * k / (steps - 1.0);
    g[k] = std::exp(t);  // largest variance first
  }
  return g;
}

namespace detail {

// Two-block coordinate ascent for one voxel of the thresholded model: only
// the coefficients with active[c] = 1 are kept, all on the slab prior, plus
// the intercept. Returns the collapsed bound at the fixed point.
inline double restricted_voxel_bound(const ViContext& ctx, const Hyperparams& hp,
                                     std::int64_t j, const std::uint8_t* active,
                                     const Eigen::VectorXd& m_beta_init,
                                     double m_beta0_init) {
  const Dataset& d = ctx.data();
  const std::int64_t p = d.p();
  std::vector<std::int64_t> cols;
  for (std::int64_t c = 0; c < p; ++c)
    if (active[c]) cols.push_back(c);
  const std::int64_t a = static_cast<std::int64_t>(cols.size());

  Eigen::MatrixXd xa;  // pattern rows restricted to the active columns
  int npat = 0;
  if (ctx.compressed()) {
    npat = ctx.n_patterns();
    xa.resize(npat, a);
    for (int q = 0; q < npat; ++q)
      for (std::int64_t k = 0; k < a; ++k) xa(q, k) = ctx.pat_x()(q, cols[k]);
  } else {
    npat = static_cast<int>(d.n());
    xa.resize(npat, a);
    for (std::int64_t i = 0; i < npat; ++i)
      for (std::int64_t k = 0; k < a; ++k) xa(i, k) = d.X(i, cols[k]);
  }

  Eigen::MatrixXd prec0 = Eigen::MatrixXd::Identity(a, a) / hp.nu1;
  if (ctx.compressed())
    prec0 += xa.transpose() * ctx.pat_w().asDiagonal() * xa;
  else
    prec0 += xa.transpose() * ctx.weights().asDiagonal() * xa;
  const Eigen::VectorXd xaw = ctx.compressed()
                                  ? (xa.transpose() * ctx.pat_w()).eval()
                                  : (xa.transpose() * ctx.weights()).eval();
  const double prec_b0 = ctx.sum_w() + 1.0 / hp.sigma0_sq;

  Eigen::VectorXd m(a);
  for (std::int64_t k = 0; k < a; ++k) m[k] = m_beta_init[cols[k]];
  double m0 = m_beta0_init;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(a, a);
  double v0 = 1.0 / prec_b0;

  auto bound_at = [&](void) {
    double acc = 0.0;
    if (ctx.compressed()) {
      for (int q = 0; q < npat; ++q) {
        const double pw = ctx.pat_w()[q];
        if (pw == 0.0) continue;
        const double eta = (a ? xa.row(q).dot(m) : 0.0) + m0;
        const double wy1 = ctx.wy()(j, q);
        acc += wy1 * log_norm_cdf(eta) + (pw - wy1) * log_norm_cdf(-eta);
        if (a) acc -= 0.5 * pw * xa.row(q).dot(s * xa.row(q).transpose());
      }
    } else {
      const std::uint8_t* yj = d.y_col(j);
      for (std::int64_t i = 0; i < d.n(); ++i) {
        const double wi = ctx.weights()[i];
        if (wi == 0.0) continue;
        const double eta = (a ? xa.row(i).dot(m) : 0.0) + m0;
        acc += wi * (yj[i] ? log_norm_cdf(eta) : log_norm_cdf(-eta));
        if (a) acc -= 0.5 * wi * xa.row(i).dot(s * xa.row(i).transpose());
      }
    }
    acc -= 0.5 * ctx.sum_w() * v0;
    for (std::int64_t k = 0; k < a; ++k)
      acc -= 0.5 * (kLog2Pi + std::log(hp.nu1) + (m[k] * m[k] + s(k, k)) / hp.nu1);
    if (a) acc += 0.5 * (log_det_spd(s, "restricted bound") + a * (1.0 + kLog2Pi));
    acc -= 0.5 * (std::log(2.0 * M_PI * hp.sigma0_sq) + (m0 * m0 + v0) / hp.sigma0_sq);
    acc += 0.5 * (std::log(v0) + 1.0 + kLog2Pi);
    return acc;
  };

  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 300; ++it) {
    // truncated-normal moments at the current means
    Eigen::VectorXd xwz = Eigen::VectorXd::Zero(a);
    double swz = 0.0;
    if (ctx.compressed()) {
      for (int q = 0; q < npat; ++q) {
        const double pw = ctx.pat_w()[q];
        if (pw == 0.0) continue;
        const double eta = (a ? xa.row(q).dot(m) : 0.0) + m0;
        const double wy1 = ctx.wy()(j, q);
        const double sq = pw * eta + wy1 * inv_mills(eta) - (pw - wy1) * inv_mills(-eta);
        swz += sq;
        if (a) xwz += (sq - pw * m0) * xa.row(q).transpose();
      }
    } else {
      const std::uint8_t* yj = d.y_col(j);
      for (std::int64_t i = 0; i < d.n(); ++i) {
        const double wi = ctx.weights()[i];
        if (wi == 0.0) continue;
        const double eta = (a ? xa.row(i).dot(m) : 0.0) + m0;
        const double ez = yj[i] ? tnorm_mean_pos(eta) : tnorm_mean_neg(eta);
        swz += wi * ez;
        if (a) xwz += wi * (ez - m0) * xa.row(i).transpose();
      }
    }
    if (a) {
      Eigen::LLT<Eigen::MatrixXd> llt(prec0);
      if (llt.info() != Eigen::Success)
        throw numeric_error("restricted bound: precision not positive definite");
      s = llt.solve(Eigen::MatrixXd::Identity(a, a));
      m = llt.solve(xwz);
    }
    m0 = (swz - xaw.dot(m)) / prec_b0;
    v0 = 1.0 / prec_b0;
    const double b = bound_at();
    if (std::fabs(b - prev) < 1e-10 * (1.0 + std::fabs(b))) return b;
    prev = b;
  }
  return prev;
}

}  // namespace detail

// Lower bound on the log posterior mass of the thresholded inclusion pattern,
// conditional on the inclusion field and its precision held at their
// variational means. Per voxel the excluded columns are dropped, the kept
// ones move to the slab prior, and q(z, beta, beta0) is re-optimized; the
// resulting collapsed bound plus the Bernoulli mass of the pattern under the
// plugged-in field is a valid lower bound because the binary-data marginal
// likelihood can never exceed one.
inline double approx_log_marginal_nu0(const VariationalState& vs, const ViContext& ctx,
                                      const Hyperparams& hp, int workers = 1) {
  const Dataset& d = ctx.data();
  const std::int64_t m = d.m(), p = d.p();
  const auto active = threshold_inclusion(vs);
  std::vector<double> part(m, 0.0);
  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t j) {
    // the flag matrix is column major, so rows must be copied out contiguously
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(p));
    for (std::int64_t c = 0; c < p; ++c) flags[static_cast<std::size_t>(c)] = active(j, c);
    double acc = detail::restricted_voxel_bound(ctx, hp, j, flags.data(),
                                                vs.m_beta.row(j), vs.m_beta0[j]);
    for (std::int64_t c = 0; c < p; ++c) {
      const double th = vs.m_theta(j, c);
      acc += (active(j, c) ? th : 0.0) - log1pexp(th);
    }
    part[j] = acc;
  });
  double total = 0.0;
  for (std::int64_t j = 0; j < m; ++j) total += part[j];
  return total;
}

struct DpeStep {
  double nu0 = 0.0;
  double elbo = 0.0;
  int sweeps = 0;
  bool converged = false;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> active;
  double log_marginal = 0.0;
  Eigen::MatrixXd m_beta;  // kept per step for the regularization path
};

struct DpePath {
  std::vector<DpeStep> steps;     // largest nu0 first
  VariationalState final_state;   // the answer: fit at the smallest nu0
  int selected = -1;              // always the last step
};

inline DpePath run_dpe(const Dataset& d, const Hyperparams& hp_base,
                       const std::vector<double>& grid, const ViOptions& opt,
                       VariationalState init) {
  if (grid.empty()) throw config_error("dpe: empty annealing grid");
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    if (!(grid[k] > grid[k + 1]))
      throw config_error("dpe: grid must be strictly decreasing");
  if (grid.front() > hp_base.nu1)
    throw config_error("dpe: largest spike variance exceeds the slab variance");

  ViContext ctx(d);
  DpePath path;
  VariationalState vs = std::move(init);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Hyperparams hp = hp_base;
    hp.nu0 = grid[k];
    CaviResult res;
    try {
      res = run_cavi(vs, ctx, hp, opt);
    } catch (const numeric_error& e) {
      throw numeric_error("dpe step " + std::to_string(k) + ": " + e.what());
    }
    DpeStep step;
    step.nu0 = grid[k];
    step.elbo = res.elbo_trace.back();
    step.sweeps = res.sweeps;
    step.converged = res.converged;
    step.active = threshold_inclusion(vs);
    step.log_marginal = approx_log_marginal_nu0(vs, ctx, hp, opt.workers);
    step.m_beta = vs.m_beta;
    path.steps.push_back(std::move(step));
  }
  path.final_state = std::move(vs);
  path.selected = static_cast<int>(path.steps.size()) - 1;
  return path;
}

// Plot-ready long table: one row per (step, voxel, covariate).
inline void export_regularization_path(const DpePath& path, const std::string& csv_path) {
  CsvWriter out(csv_path);
  out.row({"nu0", "voxel", "covariate", "coef", "active"});
  for (const DpeStep& st : path.steps) {
    const std::int64_t m = st.m_beta.rows(), p = st.m_beta.cols();
    for (std::int64_t j = 0; j < m; ++j)
      for (std::int64_t c = 0; c < p; ++c)
        out.row({fmt_double(st.nu0), std::to_string(j), std::to_string(c),
                 fmt_double(st.m_beta(j, c)), st.active(j, c) ? "1" : "0"});
  }
  out.close();
}

}  // namespace bless
