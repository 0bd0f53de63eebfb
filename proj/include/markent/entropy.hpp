#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "markent/errors.hpp"
#include "markent/kde.hpp"
#include "markent/mark_density.hpp"
#include "markent/parallel.hpp"
#include "markent/point_process.hpp"
#include "markent/stats.hpp"

namespace markent {

// Entropy estimation over the window B_n, with the density estimated on the
// translated windows B' + Y_i. The log-guard floors f-hat at exp(floor_log)
// before taking logs: a mark whose bandwidth ball captures no other sample
// point has f-hat = 0, and the guard keeps every run total. Guard hits are
// counted and surfaced; at consistency-suite scale the count is zero.
struct EntropyConfig {
  BoxWindow bn;      // B_n
  BoxWindow bprime;  // B'_n, contained in B_n
  KernelProfile kernel;
  double bandwidth = 0.0;
  double r0 = 0.0;
  double lambda = 0.0;
  double floor_log = -40.0;

  KdeConfig kde_config() const {
    return KdeConfig{kernel, bandwidth, r0, lambda, bprime};
  }

  void validate(const Manifold& m) const {
    kde_config().validate(m);
    if (!bn.contains_box(bprime)) throw input_error("EntropyConfig: B' must be contained in B_n");
  }
};

struct EntropyEstimate {
  double value = 0.0;  // nats
  long n_points = 0;
  std::vector<double> terms;  // per-point log f-hat
  long floored_count = 0;
  double min_fhat = std::numeric_limits<double>::infinity();
};

// Differential entropy -int f log f by quadrature, two resolutions agreeing
// within 1e-5.
inline double true_entropy(const MarkDensity& density) {
  const Manifold& m = density.manifold();
  const bool s3 = m.kind() == ManifoldKind::Sphere && m.dim() == 3;
  auto value_at = [&](int res) {
    double e = 0.0;
    for (const auto& node : m.quadrature_grid(res)) {
      const double f = density.density(node.point);
      e -= node.weight * f * std::log(f);
    }
    return e;
  };
  const double a = value_at(s3 ? 16 : 48);
  const double b = value_at(s3 ? 24 : 72);
  if (std::abs(a - b) > 1e-5 * std::max(1.0, std::abs(b)))
    throw accuracy_error("true_entropy: quadrature refinement disagreement");
  return b;
}

namespace detail {

inline EntropyEstimate entropy_accumulate(const Manifold& m, const MppSample& eval_pairs,
                                          const KdeEngine& engine, const EntropyConfig& cfg,
                                          bool leave_one_out) {
  EntropyEstimate est;
  const double floor_value = std::exp(cfg.floor_log);
  double sum = 0.0;
  est.terms.reserve(eval_pairs.size() / 4 + 8);
  for (std::size_t i = 0; i < eval_pairs.size(); ++i) {
    const auto y = eval_pairs.location(i);
    if (!cfg.bn.contains(y)) continue;
    const double fh = engine.evaluate_translated(
        y, eval_pairs.mark_point(i), leave_one_out ? static_cast<std::ptrdiff_t>(i) : -1);
    est.min_fhat = std::min(est.min_fhat, fh);
    double fl = fh;
    if (fl < floor_value) {
      fl = floor_value;
      ++est.floored_count;
    }
    const double term = std::log(fl);
    est.terms.push_back(term);
    sum += term;
    ++est.n_points;
  }
  est.value = -sum / (cfg.lambda * cfg.bn.volume());
  return est;
}

}  // namespace detail

// Plug-in estimator: -(1/(lambda |B_n|)) sum over points in B_n of
// log f-hat_{B'+Y_i}(xi_i), with f-hat computed from the same sample leaving
// the evaluated pair out (its own atom would otherwise contribute a
// K(0)/(lambda |B'| b^p) term that never averages away). The sample must
// cover B_n dilated by B', so every translated window is fully observed.
inline EntropyEstimate entropy_estimate(const Manifold& m, const MppSample& sample,
                                        const EntropyConfig& cfg) {
  cfg.validate(m);
  if (!sample.window.contains_box(cfg.bn.dilated_by(cfg.bprime)))
    throw input_error("entropy_estimate: sample window does not cover B_n dilated by B'");
  const KdeEngine engine(m, sample, cfg.kde_config());
  return detail::entropy_accumulate(m, sample, engine, cfg, /*leave_one_out=*/true);
}

// Modified estimator: the density is estimated from psi, the evaluation pairs
// come from the independent copy psi_star. No self-pairs exist, so nothing is
// left out.
inline EntropyEstimate entropy_estimate_modified(const Manifold& m, const MppSample& psi,
                                                 const MppSample& psi_star,
                                                 const EntropyConfig& cfg) {
  cfg.validate(m);
  if (!psi.window.contains_box(cfg.bn.dilated_by(cfg.bprime)))
    throw input_error("entropy_estimate_modified: psi does not cover B_n dilated by B'");
  const KdeEngine engine(m, psi, cfg.kde_config());
  return detail::entropy_accumulate(m, psi_star, engine, cfg, /*leave_one_out=*/false);
}

// Centering term: -(count of psi_star in B_n)/(lambda |B_n|) * E[log f-hat].
inline double mu_hat(long count_in_bn, double bn_vol, double e_log_fhat, double lambda) {
  return -(static_cast<double>(count_in_bn) / (lambda * bn_vol)) * e_log_fhat;
}

inline long count_in_window(const MppSample& sample, const BoxWindow& w) {
  long n = 0;
  for (std::size_t i = 0; i < sample.size(); ++i)
    if (w.contains(sample.location(i))) ++n;
  return n;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Monte Carlo estimate of E[log f-hat_{B'}(xi_0)] over independent (sample,
// mark) draws; the same log-guard as the estimator, so the expectation matches
// the field actually summed.
inline MeanSe estimate_e_log_fhat(const MarkDensity& density, const EntropyConfig& cfg, int reps,
                                  std::uint64_t seed, int threads = 0) {
  if (reps < 100) throw input_error("estimate_e_log_fhat: need at least 100 replications");
  const Manifold& m = density.manifold();
  cfg.kde_config().validate(m);
  const double floor_value = std::exp(cfg.floor_log);
  std::vector<double> vals(reps);
  rng::Stream root(seed);
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    rng::Stream sim = root.derive(r, rng::kRoleProcess);
    rng::Stream mk = root.derive(r, rng::kRoleEvalMark);
    const MppSample s = simulate_mpp(cfg.lambda, cfg.bprime, density, sim.next_u64());
    const KdeEngine engine(m, s, cfg.kde_config());
    const double fh = engine.evaluate(density.sample(mk));
    vals[r] = std::log(std::max(fh, floor_value));
  });
  MeanSe out;
  out.mean = stats::mean(vals);
  out.se = stats::se_of_mean(vals);
  return out;
}

struct SigmaEstimate {
  double sigma_sq = 0.0;
  double var_term = 0.0;        // lambda * Var(log f-hat(xi_0))
  double cov_term = 0.0;        // lambda^2 * symmetrized lag-grid integral
  double third_abs_moment = 0.0;  // E|log f-hat(xi_0) - mean|^3
  std::vector<double> cov_by_lag;
  std::vector<double> lag_offsets;  // first-axis offsets of the grid cells
};

// sigma_n^2 = lambda Var(log f-hat_{B'}(xi_0))
//           + lambda^2 int Cov(log f-hat_{B'}(xi_0), log f-hat_{B'+y}(xi'_y)) dy.
// Both evaluations in a covariance replication share one realization and use
// independent marks. The lag integrand is even in every axis (the process and
// the marks are reflection invariant), so the grid covers B' and the sum is
// multiplied by 2^d to account for the full lag domain.
inline SigmaEstimate sigma_n_estimate(const MarkDensity& density, const EntropyConfig& cfg,
                                      int reps, int lag_grid, std::uint64_t seed,
                                      int threads = 0) {
  if (reps < 200) throw input_error("sigma_n_estimate: need at least 200 replications");
  if (lag_grid < 1) throw input_error("sigma_n_estimate: lag grid must be positive");
  const Manifold& m = density.manifold();
  cfg.kde_config().validate(m);
  const int d = cfg.bprime.dim();
  const double floor_value = std::exp(cfg.floor_log);

  // Lag grid: midpoints of a uniform partition of B' into lag_grid^d cells.
  long cells = 1;
  for (int k = 0; k < d; ++k) cells *= lag_grid;
  std::vector<std::vector<double>> lags(cells, std::vector<double>(d));
  for (long c = 0; c < cells; ++c) {
    long rem = c;
    for (int k = d - 1; k >= 0; --k) {
      const long j = rem % lag_grid;
      rem /= lag_grid;
      lags[c][k] = (j + 0.5) * cfg.bprime.side[k] / lag_grid;
    }
  }

  // Simulation window covering B' and every B' + y for y in B'.
  BoxWindow cover = cfg.bprime.dilated_by(cfg.bprime);

  std::vector<double> g0(reps);
  std::vector<std::vector<double>> gy(cells, std::vector<double>(reps));
  rng::Stream root(seed);
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    rng::Stream sim = root.derive(r, rng::kRoleProcess);
    rng::Stream mk = root.derive(r, rng::kRoleEvalMark);
    const MppSample s = simulate_mpp(cfg.lambda, cover, density, sim.next_u64());
    const KdeEngine engine(m, s, cfg.kde_config());
    const double f0 = engine.evaluate(density.sample(mk));
    g0[r] = std::log(std::max(f0, floor_value));
    for (long c = 0; c < cells; ++c) {
      const double fy = engine.evaluate_translated(lags[c], density.sample(mk));
      gy[c][r] = std::log(std::max(fy, floor_value));
    }
  });

  SigmaEstimate out;
  out.var_term = cfg.lambda * stats::variance(g0);
  {
    const double g0_mean = stats::mean(g0);
    double acc = 0.0;
    for (double g : g0) {
      const double dev = std::abs(g - g0_mean);
      acc += dev * dev * dev;
    }
    out.third_abs_moment = acc / static_cast<double>(reps);
  }
  const double cell_vol = cfg.bprime.volume() / static_cast<double>(cells);
  const double orthants = math::ipow(2.0, d);
  out.cov_by_lag.resize(cells);
  out.lag_offsets.resize(cells);
  double cov_sum = 0.0;
  for (long c = 0; c < cells; ++c) {
    out.cov_by_lag[c] = stats::covariance(g0, gy[c]);
    out.lag_offsets[c] = lags[c][0];
    cov_sum += out.cov_by_lag[c];
  }
  out.cov_term = cfg.lambda * cfg.lambda * orthants * cov_sum * cell_vol;
  out.sigma_sq = out.var_term + out.cov_term;
  if (!(out.sigma_sq > 0.0))
    throw degenerate_error("sigma_n_estimate: nonpositive variance (undersized R or windows)");
  return out;
}

// L2 error bound for the entropy estimator.
inline double entropy_l2_bound(double k0, double c_th, double manifold_vol, double lambda,
                               double bn_vol, double bprime_vol, double b, int p, double l1,
                               double l2) {
  const double t1 = 8.0 * k0 * c_th * manifold_vol / (lambda * lambda * bn_vol * bprime_vol *
                                                      math::ipow(b, p));
  const double t2 = 4.0 / (lambda * lambda * bprime_vol);
  const double t3 = 32.0 * b * b * l2;
  const double t4 = l1 / (lambda * bn_vol);
  return 3.0 * (t1 + t2 + t3 + t4);
}

// Stationary point of the b-dependent part of entropy_l2_bound,
//   8 K0 C_theta vol / (lambda^2 |B_n||B'_n| b^p) + 32 b^2 L2,
// which gives b^{p+2} = p K0 C_theta vol / (8 L2 lambda^2 |B_n||B'_n|).
// Degenerate when L2 = 0: callers fall back to (|B_n||B'_n|)^{-1/(p+2)}.
inline double optimal_bandwidth_entropy(int p, double k0, double c_th, double manifold_vol,
                                        double l2, double lambda, double bn_vol,
                                        double bprime_vol) {
  if (!(l2 > 0.0))
    throw degenerate_error(
        "optimal_bandwidth_entropy: L2 = 0 has no interior minimum; use the fallback "
        "b = (|B_n||B'_n|)^(-1/(p+2))");
  const double num = p * k0 * c_th * manifold_vol;
  const double den = 8.0 * l2 * lambda * lambda * bn_vol * bprime_vol;
  return std::pow(num / den, 1.0 / (p + 2));
}

inline double fallback_bandwidth_entropy(double bn_vol, double bprime_vol, int p) {
  return std::pow(bn_vol * bprime_vol, -1.0 / (p + 2));
}

}  // namespace markent
