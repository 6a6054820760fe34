#pragma once

// Cluster-size inference from a bootstrap ensemble: threshold the observed
// t-statistic map at the cluster-defining threshold, label the observed
// clusters, and build each cluster's bootstrap size distribution by
// standardizing every replicate with the ensemble sd, thresholding, and
// summing the sizes of the replicate clusters that intersect the observed
// one. Also the per-voxel prevalence map and the prevalence-masked
// reliable-size mean/sd maps.

#include <vector>

#include "bless/io.hpp"
#include "bless/lattice.hpp"
#include "bless/math.hpp"
#include "bless/parallel.hpp"

namespace bless {

inline std::vector<std::uint8_t> threshold_statmap(const std::vector<double>& tstat,
                                                   double cdt, bool two_sided = false) {
  std::vector<std::uint8_t> act(tstat.size(), 0);
  for (std::size_t j = 0; j < tstat.size(); ++j) {
    const double t = two_sided ? std::fabs(tstat[j]) : tstat[j];
    act[j] = t > cdt ? 1 : 0;  // strict; NaN compares false, so stays inactive
  }
  return act;
}

struct ObservedCluster {
  std::int32_t id = 0;
  std::int64_t size = 0;
  std::vector<double> boot_sizes;  // one entry per replicate, 0 when missed
  double ci_lo = 0.0, ci_hi = 0.0;
  double mean_size = 0.0, sd_size = 0.0;
};

struct ClusterReport {
  std::vector<std::int32_t> observed_label;  // -1 outside observed clusters
  std::vector<ObservedCluster> clusters;     // ordered by decreasing size
  std::vector<double> prevalence;            // per voxel in [0,1]
  std::vector<double> size_mean, size_sd;    // NaN where prevalence <= cut
};

// stat_of(b, j) -> standardized statistic of replicate b at voxel j;
// observed: the observed statistic map.
template <typename StatFn>
ClusterReport cluster_report_impl(const LatticeMask& mask, const NeighborGraph& graph,
                                  const std::vector<double>& observed, StatFn stat_of,
                                  std::int64_t n_rep, double cdt, double ci_level,
                                  double prevalence_cut, bool two_sided, int workers) {
  const std::int64_t m = mask.n_voxels;
  if (static_cast<std::int64_t>(observed.size()) != m)
    throw config_error("cluster report: statistic length does not match mask");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw config_error("cluster report: credible level must be in (0,1)");
  ClusterReport rep;
  std::vector<std::int64_t> obs_sizes;
  rep.observed_label =
      connected_components(mask, graph, threshold_statmap(observed, cdt, two_sided),
                           &obs_sizes);
  const std::int64_t nc = static_cast<std::int64_t>(obs_sizes.size());
  rep.clusters.resize(nc);
  for (std::int32_t c = 0; c < nc; ++c) {
    rep.clusters[c].id = c;
    rep.clusters[c].size = obs_sizes[c];
    rep.clusters[c].boot_sizes.assign(n_rep, 0.0);
  }

  // per replicate: label its own thresholded map, then credit each observed
  // cluster with the total size of intersecting replicate clusters, and
  // record per-voxel activity and containing-cluster size
  std::vector<double> prev(m, 0.0), smean(m, 0.0), ssq(m, 0.0);
  std::vector<std::vector<double>> credit(n_rep);
  std::vector<std::vector<double>> vox_size(n_rep);
  parallel_for(static_cast<std::size_t>(n_rep), workers, [&](std::size_t b) {
    std::vector<std::uint8_t> act(m, 0);
    std::vector<double> stat(m);
    for (std::int64_t j = 0; j < m; ++j) {
      stat[j] = stat_of(b, j);
      const double t = two_sided ? std::fabs(stat[j]) : stat[j];
      act[j] = t > cdt ? 1 : 0;
    }
    std::vector<std::int64_t> sizes;
    const std::vector<std::int32_t> lab = connected_components(mask, graph, act, &sizes);
    // which replicate clusters touch which observed cluster
    std::vector<double> cr(nc, 0.0);
    if (nc > 0) {
      std::vector<std::vector<std::uint8_t>> seen(nc);
      for (auto& s : seen) s.assign(sizes.size(), 0);
      for (std::int64_t j = 0; j < m; ++j) {
        const std::int32_t oc = rep.observed_label[j];
        if (oc < 0 || lab[j] < 0) continue;
        if (!seen[oc][lab[j]]) {
          seen[oc][lab[j]] = 1;
          cr[oc] += static_cast<double>(sizes[lab[j]]);
        }
      }
    }
    credit[b] = std::move(cr);
    std::vector<double> vs(m, 0.0);
    for (std::int64_t j = 0; j < m; ++j)
      if (lab[j] >= 0) vs[j] = static_cast<double>(sizes[lab[j]]);
    vox_size[b] = std::move(vs);
  });

  for (std::int64_t b = 0; b < n_rep; ++b) {
    for (std::int32_t c = 0; c < nc; ++c)
      rep.clusters[c].boot_sizes[b] = credit[b][c];
    for (std::int64_t j = 0; j < m; ++j) {
      if (vox_size[b][j] > 0.0) prev[j] += 1.0;
      smean[j] += vox_size[b][j];
      ssq[j] += vox_size[b][j] * vox_size[b][j];
    }
  }

  const double tail = 0.5 * (1.0 - ci_level);
  for (std::int32_t c = 0; c < nc; ++c) {
    ObservedCluster& oc = rep.clusters[c];
    std::vector<double> sorted = oc.boot_sizes;
    std::sort(sorted.begin(), sorted.end());
    oc.ci_lo = quantile_sorted(sorted, tail);
    oc.ci_hi = quantile_sorted(sorted, 1.0 - tail);
    double s = 0.0;
    for (double v : oc.boot_sizes) s += v;
    oc.mean_size = s / n_rep;
    double dev = 0.0;
    for (double v : oc.boot_sizes) dev += (v - oc.mean_size) * (v - oc.mean_size);
    oc.sd_size = std::sqrt(dev / n_rep);
  }

  rep.prevalence.assign(m, 0.0);
  rep.size_mean.assign(m, std::numeric_limits<double>::quiet_NaN());
  rep.size_sd.assign(m, std::numeric_limits<double>::quiet_NaN());
  for (std::int64_t j = 0; j < m; ++j) {
    rep.prevalence[j] = prev[j] / n_rep;
    if (rep.prevalence[j] > prevalence_cut) {
      const double mu = smean[j] / n_rep;
      rep.size_mean[j] = mu;
      rep.size_sd[j] = std::sqrt(std::max(0.0, ssq[j] / n_rep - mu * mu));
    }
  }
  return rep;
}

// samples: the (B, M) slice for one covariate; sd: ensemble sd for that
// covariate (the standardizer); observed tstat = mean/sd.
inline ClusterReport cluster_size_inference(const LatticeMask& mask,
                                            const NeighborGraph& graph,
                                            const Ensemble& ens, std::int64_t covariate,
                                            double cdt, double ci_level = 0.95,
                                            double prevalence_cut = 0.5,
                                            bool two_sided = false, int workers = 1) {
  if (ens.B < 50) throw config_error("cluster inference needs at least 50 replicates");
  const std::int64_t m = ens.M, b = ens.B;
  if (covariate < 0 || covariate >= static_cast<std::int64_t>(ens.P))
    throw config_error("cluster inference: covariate index out of range");
  std::vector<double> mean(m, 0.0), sd(m, 0.0), observed(m, 0.0);
  for (std::int64_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::int64_t k = 0; k < b; ++k) s += ens.at(k, j, covariate);
    mean[j] = s / b;
    double dev = 0.0;
    for (std::int64_t k = 0; k < b; ++k) {
      const double d = ens.at(k, j, covariate) - mean[j];
      dev += d * d;
    }
    sd[j] = std::sqrt(dev / b);
    observed[j] = mean[j] / sd[j];
  }
  return cluster_report_impl(
      mask, graph, observed,
      [&](std::size_t rep, std::int64_t j) { return ens.at(rep, j, covariate) / sd[j]; },
      b, cdt, ci_level, prevalence_cut, two_sided, workers);
}

}  // namespace bless
