#pragma once

// Scalar numeric kernels shared across the solvers: stable normal cdf /
// inverse-cdf machinery, truncated-normal moments, logistic helpers and the
// small special functions (digamma, multivariate log-gamma) the variational
// and Gibbs updates need. Everything here is branch-stable over the full
// double range so the hot loops never have to clamp their inputs.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>
#include <algorithm>

namespace bless {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
inline double log_norm_pdf(double x) { return -0.5 * (kLog2Pi + x * x); }

// exp(x^2) * erfc(x). Direct product is safe up to x ~ 26 (erfc underflows
// right where exp overflows); beyond that the asymptotic series takes over.
inline double erfcx(double x) {
  if (x < 0.0) return 2.0 * std::exp(x * x) - erfcx(-x);
  if (x <= 25.0) return std::exp(x * x) * std::erfc(x);
  const double ix2 = 1.0 / (2.0 * x * x);
  double term = 1.0, sum = 1.0;
  for (int n = 1; n <= 6; ++n) {
    term *= -(2 * n - 1) * ix2;
    sum += term;
  }
  return sum / (x * 1.7724538509055160273);  // sqrt(pi)
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

inline double log_norm_cdf(double x) {
  if (x > 6.0) return std::log1p(-0.5 * std::erfc(x / kSqrt2));
  if (x >= -1.0) return std::log(0.5 * std::erfc(-x / kSqrt2));
  // Phi(x) = 0.5 * erfcx(-x/sqrt2) * exp(-x^2/2)
  return std::log(0.5 * erfcx(-x / kSqrt2)) - 0.5 * x * x;
}

// phi(x) / Phi(x), the inverse Mills ratio. Tends to -x as x -> -inf and to
// phi(x) as x -> +inf; erfcx keeps both limits accurate.
inline double inv_mills(double x) {
  if (x > 36.0) return norm_pdf(x);
  return kSqrt2OverPi / erfcx(-x / kSqrt2);
}

// Moments of z ~ N(eta, 1) truncated to z > 0 (pos) or z <= 0 (neg).
inline double tnorm_mean_pos(double eta) { return eta + inv_mills(eta); }
inline double tnorm_mean_neg(double eta) { return eta - inv_mills(-eta); }
inline double tnorm_var_pos(double eta) {
  const double r = inv_mills(eta);
  return 1.0 - r * (r + eta);
}
inline double tnorm_var_neg(double eta) {
  const double u = inv_mills(-eta);
  return 1.0 - u * (u - eta);
}

// Wichura's PPND16 (AS 241): Phi^-1 with full double accuracy, usable deep in
// the tails where naive bisection on erfc loses everything.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw numeric_error("norm_quantile: p outside [0,1]");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -v : v;
}

inline double log1pexp(double x) {
  if (x <= -37.0) return std::exp(x);
  if (x <= 18.0) return std::log1p(std::exp(x));
  if (x <= 33.3) return x + std::exp(-x);
  return x;
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// Jaakkola-Jordan curvature tanh(xi/2)/(4 xi), continuous at 0 (limit 1/8).
inline double lambda_jj(double xi) {
  const double a = std::fabs(xi);
  if (a < 1e-4) return 0.125 - a * a / 96.0;
  return std::tanh(0.5 * a) / (4.0 * a);
}

inline double digamma(double x) {
  if (x <= 0.0 && x == std::floor(x))
    throw numeric_error("digamma: pole at non-positive integer");
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double ix = 1.0 / x, ix2 = ix * ix;
  result += std::log(x) - 0.5 * ix -
            ix2 * (1.0 / 12.0 -
                   ix2 * (1.0 / 120.0 -
                          ix2 * (1.0 / 252.0 - ix2 * (1.0 / 240.0 - ix2 / 132.0))));
  return result;
}

// log Gamma_P(a) = P(P-1)/4 log(pi) + sum_i lgamma(a + (1-i)/2)
inline double log_multigamma(int p, double a) {
  double s = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int i = 1; i <= p; ++i) s += std::lgamma(a + 0.5 * (1 - i));
  return s;
}

// Shared quantile convention: position p*n - 1/2 on the sorted sample with
// linear interpolation, so equal-size samples couple order statistic to order
// statistic exactly.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw numeric_error("quantile of empty sample");
  const double n = static_cast<double>(sorted.size());
  double h = p * n - 0.5;
  if (h <= 0.0) return sorted.front();
  if (h >= n - 1.0) return sorted.back();
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile_of(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

inline double median_of(std::vector<double> values) {
  return quantile_of(std::move(values), 0.5);
}

}  // namespace bless
