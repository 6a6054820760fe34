#pragma once

// Exact Polya-Gamma PG(1, c) sampler by alternating-series rejection. The
// target is X/4 where X follows the Jacobi-type density tilted by c; the
// proposal mixes a truncated exponential (right of the 0.64 split point)
// with a truncated inverse-Gaussian (left of it), and the accept test walks
// the partial sums of the alternating series until they bracket the uniform.

#include <cmath>

#include "bless/math.hpp"
#include "bless/rng.hpp"

namespace bless {
namespace detail {

inline constexpr double kPgTrunc = 0.64;

// n-th alternating-series coefficient of the Jacobi density at x; the two
// expressions are the theta-function representations that converge fast on
// their own side of the split.
inline double pg_a_coef(int n, double x) {
  const double k = (n + 0.5) * M_PI;
  if (x > kPgTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x > 0.0)
    return std::exp(-1.5 * (std::log(0.5 * M_PI) + std::log(x)) + std::log(k) -
                    2.0 * (n + 0.5) * (n + 0.5) / x);
  return 0.0;
}

// Probability that the proposal should come from the exponential tail.
inline double pg_mass_texpon(double z) {
  const double t = kPgTrunc;
  const double fz = 0.125 * M_PI * M_PI + 0.5 * z * z;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_norm_cdf(b);
  const double xa = x0 + z + log_norm_cdf(a);
  const double qdivp = 4.0 / M_PI * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse-Gaussian(mu = 1/z, lambda = 1) restricted to (0, kPgTrunc).
inline double pg_rtigauss(double z, RngStream& rs) {
  z = std::fabs(z);
  const double t = kPgTrunc;
  double x = t + 1.0;
  if (1.0 / t > z) {
    double alpha = 0.0;
    while (rs.uniform() > alpha) {
      double e1 = rs.exponential(), e2 = rs.exponential();
      while (e1 * e1 > 2.0 * e2 / t) {
        e1 = rs.exponential();
        e2 = rs.exponential();
      }
      x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    const double mu = 1.0 / z;
    while (x > t) {
      double y = rs.normal();
      y *= y;
      const double muy = mu * y;
      x = mu + 0.5 * mu * muy - 0.5 * mu * std::sqrt(4.0 * muy + muy * muy);
      if (rs.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

}  // namespace detail

inline double pg_draw(double c, RngStream& rs) {
  const double z = std::fabs(c) * 0.5;
  const double fz = 0.125 * M_PI * M_PI + 0.5 * z * z;
  for (;;) {
    double x;
    if (rs.uniform() < detail::pg_mass_texpon(z))
      x = detail::kPgTrunc + rs.exponential() / fz;
    else
      x = detail::pg_rtigauss(z, rs);
    double s = detail::pg_a_coef(0, x);
    const double y = rs.uniform() * s;
    for (int n = 1;; ++n) {
      if (n & 1) {
        s -= detail::pg_a_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += detail::pg_a_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

// Series evaluation of the PG(1, c) density, for validating the sampler: the
// alternating series at 4w, tilted and normalized by cosh(c/2).
inline double pg_density(double w, double c, int terms = 200) {
  if (!(w > 0.0)) return 0.0;
  const double x = 4.0 * w;
  double f = 0.0;
  for (int n = 0; n < terms; ++n) {
    const double a = detail::pg_a_coef(n, x);
    f += (n & 1) ? -a : a;
    if (a < 1e-17 && n > 2) break;
  }
  const double z = 0.5 * c;
  return 4.0 * std::cosh(z) * std::exp(-0.5 * z * z * x) * f;
}

}  // namespace bless
