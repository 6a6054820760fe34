#pragma once

// Synthetic lesion data on an even 2-d lattice split into four equal
// quadrants. Each subject draws Poisson many square lesions per quadrant with
// uniformly placed centers (blocks clipped at the image border). The sex
// covariate multiplies the rate of both right-side quadrants, the group
// covariate multiplies the lower-left quadrant; "lower" means smaller second
// coordinate.
//
// Because lesion centers thin to independent per-cell Poisson counts, the
// voxel-level hit probability is exactly 1 - exp(-coverage intensity), which
// gives closed-form true probit coefficients for every voxel.

#include <Eigen/Dense>
#include <cstdint>

#include "bless/dataset.hpp"
#include "bless/rng.hpp"

namespace bless {

struct SimConfig {
  std::uint32_t nx = 50, ny = 50;
  std::int64_t n = 500;
  double lambda = 1.0;
  double sex_multiplier = 4.0;
  double group_multiplier = 4.0;
  int lesion_size = 3;  // odd edge length
  std::uint64_t seed = 1;
};

struct SimTruth {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> active;  // M x 2
  Eigen::MatrixXd beta;   // M x 2
  Eigen::VectorXd beta0;  // M
};

struct SimResult {
  Dataset data;
  SimTruth truth;
};

namespace detail {

// Quadrant rate for one subject; qx/qy flag the high half of each axis.
inline double quadrant_rate(const SimConfig& cfg, bool qx, bool qy, double sex,
                            double group) {
  if (qx) return cfg.lambda * std::pow(cfg.sex_multiplier, sex);
  if (!qy) return cfg.lambda * std::pow(cfg.group_multiplier, group);
  return cfg.lambda;
}

}  // namespace detail

inline SimResult generate_dataset(const SimConfig& cfg) {
  if (cfg.nx % 2 || cfg.ny % 2) throw config_error("sim lattice axes must be even");
  if (cfg.lesion_size < 1 || cfg.lesion_size % 2 == 0)
    throw config_error("sim lesion size must be odd");
  if (cfg.lambda < 0.0) throw config_error("sim lambda must be non-negative");
  const std::int64_t nx = cfg.nx, ny = cfg.ny;
  const std::int64_t hw = nx / 2, hh = ny / 2;
  const int h = (cfg.lesion_size - 1) / 2;

  SimResult out;
  Dataset& d = out.data;
  d.mask = full_mask({cfg.nx, cfg.ny});
  d.graph = build_graph(d.mask);
  d.covariates = {"sex", "group"};
  d.X.resize(cfg.n, 2);
  d.y.assign(static_cast<std::size_t>(cfg.n) * d.m(), 0);

  for (std::int64_t i = 0; i < cfg.n; ++i) {
    RngStream cov(cfg.seed, StreamKind::SimCovariates, static_cast<std::uint32_t>(i));
    const double sex = cov.uniform() < 0.5 ? 0.0 : 1.0;
    const double group = cov.uniform() < 0.5 ? 0.0 : 1.0;
    d.X(i, 0) = sex;
    d.X(i, 1) = group;
    for (std::uint32_t q = 0; q < 4; ++q) {
      const bool qx = q & 1, qy = q & 2;
      const double rate = detail::quadrant_rate(cfg, qx, qy, sex, group);
      RngStream les(cfg.seed, StreamKind::SimLesions, static_cast<std::uint32_t>(i), q);
      const int k = les.poisson(rate);
      for (int l = 0; l < k; ++l) {
        const std::int64_t cx = (qx ? hw : 0) + les.uniform_below(static_cast<std::uint32_t>(hw));
        const std::int64_t cy = (qy ? hh : 0) + les.uniform_below(static_cast<std::uint32_t>(hh));
        for (std::int64_t x = std::max<std::int64_t>(0, cx - h);
             x <= std::min(nx - 1, cx + h); ++x)
          for (std::int64_t y = std::max<std::int64_t>(0, cy - h);
               y <= std::min(ny - 1, cy + h); ++y)
            d.y[(y * nx + x) * cfg.n + i] = 1;
      }
    }
  }

  // Exact truth. Coverage intensity at voxel v for a subject class is the sum
  // over in-image cells within Chebyshev distance h of rate / quadrant area.
  const double area = static_cast<double>(hw) * static_cast<double>(hh);
  SimTruth& t = out.truth;
  t.active.resize(d.m(), 2);
  t.beta.resize(d.m(), 2);
  t.beta0.resize(d.m());
  for (std::int64_t vy = 0; vy < ny; ++vy) {
    for (std::int64_t vx = 0; vx < nx; ++vx) {
      const std::int64_t j = vy * nx + vx;
      double m00 = 0, m10 = 0, m01 = 0;  // (sex, group) in {00, 10, 01}
      for (std::int64_t ux = std::max<std::int64_t>(0, vx - h);
           ux <= std::min(nx - 1, vx + h); ++ux) {
        for (std::int64_t uy = std::max<std::int64_t>(0, vy - h);
             uy <= std::min(ny - 1, vy + h); ++uy) {
          const bool qx = ux >= hw, qy = uy >= hh;
          m00 += detail::quadrant_rate(cfg, qx, qy, 0, 0) / area;
          m10 += detail::quadrant_rate(cfg, qx, qy, 1, 0) / area;
          m01 += detail::quadrant_rate(cfg, qx, qy, 0, 1) / area;
        }
      }
      const double q00 = norm_quantile(-std::expm1(-m00));
      t.beta0[j] = q00;
      t.beta(j, 0) = norm_quantile(-std::expm1(-m10)) - q00;
      t.beta(j, 1) = norm_quantile(-std::expm1(-m01)) - q00;
      t.active(j, 0) = vx >= hw ? 1 : 0;
      t.active(j, 1) = (vx < hw && vy < hh) ? 1 : 0;
    }
  }
  return out;
}

// Per-voxel response rate over the subjects whose covariate c equals v.
// Voxels get NaN when the subgroup is empty.
inline Eigen::VectorXd empirical_rates(const Dataset& d, std::int64_t c, double v) {
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < d.n(); ++i) count += (d.X(i, c) == v) ? 1 : 0;
  Eigen::VectorXd rate(d.m());
  if (count == 0) {
    rate.setConstant(std::numeric_limits<double>::quiet_NaN());
    return rate;
  }
  for (std::int64_t j = 0; j < d.m(); ++j) {
    std::int64_t hits = 0;
    const std::uint8_t* yj = d.y_col(j);
    for (std::int64_t i = 0; i < d.n(); ++i)
      if (d.X(i, c) == v) hits += yj[i];
    rate[j] = static_cast<double>(hits) / static_cast<double>(count);
  }
  return rate;
}

}  // namespace bless
