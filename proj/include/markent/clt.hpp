#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "markent/errors.hpp"
#include "markent/math.hpp"
#include "markent/rng.hpp"
#include "markent/stats.hpp"

namespace markent {

// Berry-Esseen bound for deterministic sums of a centered m-dependent field:
//   75 (10m+1)^{(q-1)d} (Var sum)^{-q/2} * sum of E|X_i|^q.
inline double chen_shao_bound(double m, double q, int d, double var_sum,
                              double sum_abs_q_moments) {
  if (!(var_sum > 0.0)) throw input_error("chen_shao_bound: variance must be positive");
  if (!(q > 2.0 && q <= 3.0)) throw input_error("chen_shao_bound: q must lie in (2,3]");
  return 75.0 * std::pow(10.0 * m + 1.0, (q - 1.0) * d) * std::pow(var_sum, -q / 2.0) *
         sum_abs_q_moments;
}

// Random-sum version over a cubic window: blocks over unit cubes form an
// (m_n+1)-dependent field, giving 75 (10 m_n + 11)^{(q-1)d} |B_n| sigma_n^{-q}
// times the q-th absolute moment of one unit-cube block sum.
inline double random_sum_bound(double m_n, double q, int d, double bn_vol, double sigma_n,
                               double block_q_moment) {
  if (!(sigma_n > 0.0)) throw input_error("random_sum_bound: sigma must be positive");
  if (!(q > 2.0 && q <= 3.0)) throw input_error("random_sum_bound: q must lie in (2,3]");
  return 75.0 * std::pow(10.0 * m_n + 11.0, (q - 1.0) * d) * bn_vol * std::pow(sigma_n, -q) *
         block_q_moment;
}

// Field values keyed by points in C_p = [0,p)^d, collected into block sums
// over the unit-cube lattice. The blocks partition the points, so the block
// total equals the field total.
inline std::vector<double> block_sums(std::span<const double> locations,
                                      std::span<const double> values, int d, int p) {
  if (d < 1 || p < 1) throw input_error("block_sums: bad lattice parameters");
  if (locations.size() != values.size() * static_cast<std::size_t>(d))
    throw input_error("block_sums: location/value size mismatch");
  long cells = 1;
  for (int k = 0; k < d; ++k) cells *= p;
  std::vector<double> blocks(cells, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    long lin = 0;
    for (int k = 0; k < d; ++k) {
      const double y = locations[i * d + k];
      if (!(y >= 0.0 && y < static_cast<double>(p)))
        throw input_error("block_sums: point outside the lattice cover");
      lin = lin * p + static_cast<long>(std::floor(y));
    }
    blocks[lin] += values[i];
  }
  return blocks;
}

// Limiting variance of |U|^{-1/2} random sums: lambda E[X_0^2] + lambda^2 *
// integral of the covariance function. Nonpositive results signal degeneracy
// to the caller (reported, not thrown).
inline double limit_variance(double lambda, double e_x0_sq, double cov_integral) {
  if (e_x0_sq < 0.0) throw input_error("limit_variance: negative second moment");
  return lambda * e_x0_sq + lambda * lambda * cov_integral;
}

inline double standardized_statistic(double e_star, double mu_hat, double sigma_n,
                                     double bn_vol) {
  if (!(sigma_n > 0.0)) throw input_error("standardized_statistic: sigma must be positive");
  return std::sqrt(bn_vol) * (e_star - mu_hat) / sigma_n;
}

// Rate expression of the entropy CLT:
//   600 a lambda (1 + lambda^2 + lambda^3) (10|B'|^{1/d} + 11)^{2d} / sqrt(|B_n|).
// The constant a is nonconstructive; it is caller-supplied and the bound is
// reported as a diagnostic, with only its decay order asserted.
inline double clt_rate_bound(double a, double lambda, double bprime_vol, double bn_vol, int d) {
  if (!(a > 0.0)) throw input_error("clt_rate_bound: a must be positive");
  const double side = std::pow(bprime_vol, 1.0 / d);
  return 600.0 * a * lambda * (1.0 + lambda * lambda + lambda * lambda * lambda) *
         std::pow(10.0 * side + 11.0, 2.0 * d) / std::sqrt(bn_vol);
}

// ---------------------------------------------------------------------------
// Synthetic m-dependent field: a moving average over lattice innovations.
// X_y = scale * sum of innovations in the cube of radius `radius` around
// floor(y). Values at points whose floors differ by more than 2*radius share
// no innovation, so the field is m-dependent with m = 2*radius + 1 (in the
// continuum metric). Closed-form moments make it an exact oracle for the
// limiting-variance formula.
// ---------------------------------------------------------------------------
enum class InnovationLaw { Normal, CenteredExponential };

struct LatticeMovingAverage {
  int d = 1;
  int radius = 2;
  InnovationLaw law = InnovationLaw::Normal;
  double scale = 1.0;

  double m_dependence() const { return 2.0 * radius + 1.0; }
  long window_cells() const {
    long c = 1;
    for (int k = 0; k < d; ++k) c *= 2 * radius + 1;
    return c;
  }
  // E[X_0^2] = scale^2 * (2h+1)^d (unit-variance innovations).
  double e_x0_sq() const { return scale * scale * static_cast<double>(window_cells()); }
  // int Cov(X_0, X_y) dy = scale^2 * (2h+1)^{2d}: per axis the overlap count
  // (2h+1-|j|)+ summed over integer lags is (2h+1)^2.
  double cov_integral() const {
    return scale * scale * math::ipow(static_cast<double>(window_cells()), 2);
  }

  // Innovations on the lattice [-radius, p + radius)^d, lexicographic order.
  std::vector<double> innovations(int p, rng::Stream& rng) const {
    long total = 1;
    for (int k = 0; k < d; ++k) total *= p + 2 * radius;
    std::vector<double> eps(total);
    for (long i = 0; i < total; ++i)
      eps[i] = law == InnovationLaw::Normal ? rng.normal() : rng.exponential() - 1.0;
    return eps;
  }

  double value_at(std::span<const double> y, int p, std::span<const double> eps) const {
    const int ext = p + 2 * radius;
    std::array<long, 3> base{};
    for (int k = 0; k < d; ++k) base[k] = static_cast<long>(std::floor(y[k]));
    double s = 0.0;
    std::array<int, 3> off{};
    for (off[0] = -radius; off[0] <= radius; ++off[0]) {
      for (off[1] = (d > 1 ? -radius : 0); off[1] <= (d > 1 ? radius : 0); ++off[1]) {
        for (off[2] = (d > 2 ? -radius : 0); off[2] <= (d > 2 ? radius : 0); ++off[2]) {
          long lin = 0;
          for (int k = 0; k < d; ++k) lin = lin * ext + (base[k] + off[k] + radius);
          s += eps[lin];
        }
      }
    }
    return scale * s;
  }
};

struct CltReport {
  std::vector<double> standardized;
  double ks_distance = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double qq_correlation = 0.0;
  double berry_esseen_bound = 0.0;
  double sigma_n = 0.0;
  double m_n = 0.0;
  double bn_vol = 0.0;
  double bprime_vol = 0.0;

  void finalize() {
    ks_distance = stats::ks_distance(standardized);
    mean = stats::mean(standardized);
    variance = stats::variance(standardized);
    qq_correlation = stats::qq_correlation(standardized);
  }
};

}  // namespace markent
