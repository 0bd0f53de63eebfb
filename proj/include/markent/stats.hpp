#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "markent/errors.hpp"
#include "markent/math.hpp"

namespace markent::stats {

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance (two-pass).
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw input_error("variance: need at least 2 samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

inline double se_of_mean(std::span<const double> xs) {
  return stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

inline double covariance(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw input_error("covariance: size mismatch");
  const double mx = mean(xs), my = mean(ys);
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (xs[i] - mx) * (ys[i] - my);
  return s / static_cast<double>(xs.size() - 1);
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const double c = covariance(xs, ys);
  return c / std::sqrt(variance(xs) * variance(ys));
}

// Two-sided discrete Kolmogorov-Smirnov distance to the standard normal.
inline double ks_distance(std::span<const double> samples) {
  if (samples.size() < 20) throw input_error("ks_distance: need at least 20 samples");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double phi = math::normal_cdf(xs[i]);
    d = std::max(d, std::abs(phi - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(phi - static_cast<double>(i) / n));
  }
  return d;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least-squares slope of log y on log x.
inline SlopeFit loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 3)
    throw input_error("loglog_slope: need at least 3 matched points");
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw input_error("loglog_slope: all values must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  const double mx = mean(lx), my = mean(ly);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

// (theoretical normal quantile, empirical quantile) pairs for Q-Q output.
inline std::vector<std::pair<double, double>> qq_pairs(std::span<const double> samples) {
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(xs.size());
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    out.emplace_back(math::normal_quantile((static_cast<double>(i) + 0.5) / n), xs[i]);
  return out;
}

inline double qq_correlation(std::span<const double> samples) {
  const auto pairs = qq_pairs(samples);
  std::vector<double> t(pairs.size()), e(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    t[i] = pairs[i].first;
    e[i] = pairs[i].second;
  }
  return pearson(t, e);
}

}  // namespace markent::stats
