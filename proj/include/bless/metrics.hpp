#pragma once

// Evaluation measures: confusion rates against a known truth map,
// bias/variance/MSE of replicated estimates, and per-voxel distances between
// posterior sample sets. Rates with an empty denominator are reported as NaN
// (undefined), never coerced to 0 or 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bless/math.hpp"

namespace bless {

struct ConfusionRates {
  double tpr, tdr, fpr, fdr;  // NaN where the denominator is empty
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline ConfusionRates confusion_rates(const std::vector<std::uint8_t>& est,
                                      const std::vector<std::uint8_t>& truth) {
  if (est.size() != truth.size())
    throw config_error("confusion rates: length mismatch");
  ConfusionRates r{};
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (truth[i] && est[i]) ++r.tp;
    else if (!truth[i] && est[i]) ++r.fp;
    else if (truth[i]) ++r.fn;
    else ++r.tn;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.tpr = (r.tp + r.fn) ? static_cast<double>(r.tp) / (r.tp + r.fn) : nan;
  r.fpr = (r.fp + r.tn) ? static_cast<double>(r.fp) / (r.fp + r.tn) : nan;
  r.tdr = (r.tp + r.fp) ? static_cast<double>(r.tp) / (r.tp + r.fp) : nan;
  r.fdr = (r.tp + r.fp) ? static_cast<double>(r.fp) / (r.tp + r.fp) : nan;
  return r;
}

struct BiasVarMse {
  std::vector<double> bias, var, mse;  // per voxel; mse = bias^2 + var exactly
};

// estimates: R replicates of M values, est[r][j]; truth: M values.
inline BiasVarMse bias_var_mse(const std::vector<std::vector<double>>& est,
                               const std::vector<double>& truth) {
  const std::size_t r = est.size();
  if (r < 2) throw config_error("bias/var/mse needs at least 2 replicates");
  const std::size_t m = truth.size();
  BiasVarMse out;
  out.bias.assign(m, 0.0);
  out.var.assign(m, 0.0);
  out.mse.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t b = 0; b < r; ++b) {
      if (est[b].size() != m) throw config_error("bias/var/mse: ragged replicate");
      s += est[b][j];
    }
    const double mean = s / r;
    double ss = 0.0;
    for (std::size_t b = 0; b < r; ++b) ss += (est[b][j] - mean) * (est[b][j] - mean);
    out.bias[j] = mean - truth[j];
    out.var[j] = ss / r;
    out.mse[j] = out.bias[j] * out.bias[j] + out.var[j];
  }
  return out;
}

struct AggregateTrio {
  double bias = 0.0, var = 0.0, mse = 0.0;
  double mse_pervoxel = 0.0;  // mean of the per-voxel MSEs, for reference
  std::int64_t voxels = 0;
};

// Scenario-level aggregation: average bias and variance over the chosen voxel
// set, then recompose mse = bias^2 + var from the aggregates.
inline AggregateTrio aggregate_trio(const BiasVarMse& bvm,
                                    const std::vector<std::uint8_t>& subset) {
  if (subset.size() != bvm.bias.size())
    throw config_error("aggregate trio: subset length mismatch");
  AggregateTrio a;
  for (std::size_t j = 0; j < subset.size(); ++j) {
    if (!subset[j]) continue;
    ++a.voxels;
    a.bias += bvm.bias[j];
    a.var += bvm.var[j];
    a.mse_pervoxel += bvm.mse[j];
  }
  if (a.voxels == 0) {
    a.bias = a.var = a.mse = a.mse_pervoxel = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  a.bias /= a.voxels;
  a.var /= a.voxels;
  a.mse_pervoxel /= a.voxels;
  a.mse = a.bias * a.bias + a.var;
  return a;
}

struct DistancePair {
  double kl = 0.0;  // NaN when a moment fit is degenerate
  double w1 = 0.0;
};

inline double gaussian_kl(double mu_a, double var_a, double mu_b, double var_b) {
  if (!(var_a > 0.0) || !(var_b > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * (std::log(var_b / var_a) + (var_a + (mu_a - mu_b) * (mu_a - mu_b)) / var_b -
                1.0);
}

// KL between moment-matched Gaussian fits (direction a||b) and the empirical
// first Wasserstein distance by quantile coupling at the smaller sample count.
inline DistancePair posterior_distance(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 30 || b.size() < 30)
    throw config_error("posterior distance needs at least 30 samples per set");
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= a.size();
  mb /= b.size();
  double va = 0.0, vb = 0.0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  va /= a.size();
  vb /= b.size();
  DistancePair d;
  d.kl = gaussian_kl(ma, va, mb, vb);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t k = std::min(a.size(), b.size());
  double w = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double p = (i + 0.5) / k;  // exact order statistic on the smaller set
    w += std::fabs(quantile_sorted(a, p) - quantile_sorted(b, p));
  }
  d.w1 = w / k;
  return d;
}

}  // namespace bless
