#pragma once

// Counter-based RNG used everywhere: Philox4x32-10 with the reference round
// constants. A stream is keyed by (seed, purpose, id1, id2); draws inside a
// stream walk the remaining counter word. Because the mapping from key to
// output is pure, any scheduling of streams across threads reproduces the
// serial results bit for bit.

#include <cmath>
#include <cstdint>

#include "bless/math.hpp"

namespace bless {

namespace detail {
inline void philox_round(std::uint32_t x[4], std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t p0 = 0xD2511F53ull * x[0];
  const std::uint64_t p1 = 0xCD9E8D57ull * x[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t y1 = x[1], y3 = x[3];
  x[0] = hi1 ^ y1 ^ k0;
  x[1] = lo1;
  x[2] = hi0 ^ y3 ^ k1;
  x[3] = lo0;
}
}  // namespace detail

inline void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2],
                          std::uint32_t out[4]) {
  std::uint32_t x[4] = {ctr[0], ctr[1], ctr[2], ctr[3]};
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    detail::philox_round(x, k0, k1);
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  out[0] = x[0]; out[1] = x[1]; out[2] = x[2]; out[3] = x[3];
}

// Stream purposes; keeping them distinct keeps every consumer of randomness
// on its own counter lane even when ids collide.
enum class StreamKind : std::uint32_t {
  SimCovariates = 1,
  SimLesions = 2,
  BootWeights = 3,
  BootShifts = 4,
  GibbsVoxel = 5,
  GibbsTheta = 6,
  GibbsGlobal = 7,
  Generic = 8,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamKind kind, std::uint32_t id1 = 0,
            std::uint32_t id2 = 0)
      : idx_(4) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    ctr_[0] = static_cast<std::uint32_t>(kind);
    ctr_[1] = id1;
    ctr_[2] = id2;
    ctr_[3] = 0;
    have_spare_normal_ = false;
  }

  std::uint32_t next_u32() {
    if (idx_ == 4) {
      philox4x32_10(ctr_, key_, block_);
      ++ctr_[3];
      idx_ = 0;
    }
    return block_[idx_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform on (0,1), never returning an exact endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_normal_ = r * std::sin(a);
    have_spare_normal_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang for shape >= 1, boosted below 1. Unit scale.
  double gamma(double shape) {
    if (shape <= 0.0) throw numeric_error("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

  int poisson(double rate) {
    if (rate < 0.0) throw numeric_error("poisson: negative rate");
    if (rate == 0.0) return 0;
    if (rate < 30.0) {
      // Knuth product-of-uniforms; rates here are lesion counts, always small.
      const double limit = std::exp(-rate);
      int k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    // Split large rates; keeps the inner loop bounded without a second method.
    return poisson(rate * 0.5) + poisson(rate - rate * 0.5);
  }

  // Uniform integer in [0, n) by rejection on the top bits (no modulo bias).
  std::uint32_t uniform_below(std::uint32_t n) {
    if (n == 0) throw numeric_error("uniform_below: empty range");
    const std::uint32_t threshold = (-n) % n;  // 2^32 mod n
    for (;;) {
      const std::uint32_t r = next_u32();
      if (r >= threshold) return r % n;
    }
  }

  // z ~ N(mean, 1) conditioned on z > 0 (positive=true) or z <= 0.
  // Inverse-cdf form: one uniform and one tail-stable quantile per draw.
  double trunc_normal(double mean, bool positive) {
    if (positive) {
      const double tail = norm_cdf(mean);  // P(z > 0)
      if (tail <= 0.0) return 0.0;
      return mean - norm_quantile_safe(uniform() * tail);
    }
    const double tail = norm_cdf(-mean);  // P(z <= 0)
    if (tail <= 0.0) return 0.0;
    return mean + norm_quantile_safe(uniform() * tail);
  }

 private:
  static double norm_quantile_safe(double p) {
    // p can round to 0 when the conditioning event is astronomically rare;
    // fall back to the deep-tail asymptote instead of -inf.
    if (p < 1e-300) p = 1e-300;
    return norm_quantile(p);
  }

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t block_[4];
  int idx_;
  bool have_spare_normal_;
  double spare_normal_ = 0.0;
};

}  // namespace bless
