#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "markent/errors.hpp"

namespace markent::rng {

// Counter-based random streams. A stream is a splitmix64 walk whose starting
// point is a hash of (seed, key words...), so streams derived with distinct
// keys are statistically independent and every consumer can be handed its own
// stream by (seed, replication id, role). Pure 64-bit integer arithmetic:
// identical output on every platform and for any thread schedule.

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(mix64(seed + kGamma)) {}

  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) : state_(seed) {
    for (std::uint64_t w : key) state_ = mix64(state_ + kGamma + w);
    state_ = mix64(state_ + kGamma);
  }

  Stream derive(std::uint64_t a, std::uint64_t b = 0) const {
    return Stream(state_, {a, b});
  }

  std::uint64_t next_u64() { return mix64(state_ += kGamma); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Marsaglia polar method with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double exponential() { return -std::log1p(-uniform01()); }

  // Poisson sampling: Knuth product for small means, Hormann's PTRS
  // transformed rejection for large ones (exact, not an approximation).
  long poisson(double mean) {
    if (mean < 0.0) throw input_error("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
      const double limit = std::exp(-mean);
      long k = 0;
      double prod = uniform01();
      while (prod > limit) {
        ++k;
        prod *= uniform01();
      }
      return k;
    }
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
      double u = uniform01() - 0.5;
      double v = uniform01();
      const double us = 0.5 - std::abs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kf * log_mean - mean - std::lgamma(kf + 1.0))
        return static_cast<long>(kf);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream roles used throughout the experiment pipelines, so that e.g. a
// process realization and its independent copy provably never share a walk.
enum Role : std::uint64_t {
  kRoleLocations = 0x101,
  kRoleMarks = 0x102,
  kRoleProcess = 0x201,
  kRoleProcessCopy = 0x202,
  kRoleEvalMark = 0x203,
  kRoleField = 0x204,
  kRoleGeneric = 0x2FF,
};

}  // namespace markent::rng
