#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "markent/clt.hpp"
#include "markent/entropy.hpp"
#include "markent/experiment_config.hpp"
#include "markent/experiments_common.hpp"
#include "markent/parallel.hpp"
#include "markent/point_process.hpp"
#include "markent/rng.hpp"

namespace markent {

namespace detail {

inline std::string qq_csv_from(const std::vector<double>& samples) {
  std::string out = "theoretical_quantile,empirical_quantile\n";
  for (const auto& [t, e] : stats::qq_pairs(samples))
    out += csv_row({fmt(t), fmt(e)});
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// clt-synthetic: Poisson random sums of a lattice moving-average field.
// Checks the limiting-variance formula and normality of standardized sums.
// ---------------------------------------------------------------------------
inline ExperimentResult run_clt_synthetic(const ExperimentConfig& cfg) {
  detail::Timer timer;
  ExperimentResult res;
  const int d = cfgutil::get_or<int>(cfg.raw, "d", 1);
  const int p = cfgutil::get_or<int>(cfg.raw, "p", 100);
  const int radius = cfgutil::get_or<int>(cfg.raw, "radius", 2);
  const std::string law_tag = cfgutil::get_or<std::string>(cfg.raw, "innovations", "normal");
  const int var_reps = cfgutil::get_or<int>(cfg.raw, "var_replications", 1000);
  const int clt_reps = cfgutil::get_or<int>(cfg.raw, "clt_replications", 500);
  const double var_tol = cfgutil::get_or<double>(cfg.raw, "variance_rel_tol", 0.10);
  const double ks_tol = cfgutil::get_or<double>(cfg.raw, "ks_tol", 0.08);

  LatticeMovingAverage field;
  field.d = d;
  field.radius = radius;
  field.law = law_tag == "exponential" ? InnovationLaw::CenteredExponential
                                       : InnovationLaw::Normal;
  field.scale = cfgutil::get_or<double>(
      cfg.raw, "scale", 1.0 / std::sqrt(static_cast<double>(field.window_cells())));

  const BoxWindow window = BoxWindow::cube(static_cast<double>(p), d);
  const double u_vol = window.volume();
  const double sigma_sq = limit_variance(cfg.lambda, field.e_x0_sq(), field.cov_integral());

  const int total_reps = std::max(var_reps, clt_reps);
  std::vector<double> sums(total_reps);
  std::vector<double> block0(total_reps);  // field sum over the unit cube at the origin
  rng::Stream root(cfg.seed);
  parallel_for(static_cast<std::size_t>(total_reps), cfg.threads, [&](std::size_t r) {
    rng::Stream loc = root.derive(r, rng::kRoleLocations);
    rng::Stream inn = root.derive(r, rng::kRoleField);
    const long n = loc.poisson(cfg.lambda * u_vol);
    std::vector<double> ys(static_cast<std::size_t>(n) * d);
    for (long i = 0; i < n * d; ++i) ys[i] = loc.uniform(0.0, static_cast<double>(p));
    const std::vector<double> eps = field.innovations(p, inn);
    double s = 0.0, b0 = 0.0;
    for (long i = 0; i < n; ++i) {
      std::span<const double> y(ys.data() + i * d, static_cast<std::size_t>(d));
      const double v = field.value_at(y, p, eps);
      s += v;
      bool in_first_cube = true;
      for (int k = 0; k < d; ++k)
        if (y[k] >= 1.0) in_first_cube = false;
      if (in_first_cube) b0 += v;
    }
    sums[r] = s;
    block0[r] = b0;
  });

  std::vector<double> var_pool(sums.begin(), sums.begin() + var_reps);
  const double mc_var = stats::variance(var_pool) / u_vol;
  const double ratio = mc_var / sigma_sq;
  detail::add_assert(res.assertions, "limit-variance/ratio", std::abs(ratio - 1.0) <= var_tol,
                     ratio, var_tol, "|U|^-1 MC variance over formula");

  std::vector<double> standardized(clt_reps);
  for (int r = 0; r < clt_reps; ++r) standardized[r] = sums[r] / std::sqrt(u_vol * sigma_sq);
  CltReport report;
  report.standardized = standardized;
  report.finalize();
  report.sigma_n = std::sqrt(stats::variance(var_pool));
  report.m_n = field.m_dependence();
  report.bn_vol = u_vol;

  double block_third = 0.0;
  for (int r = 0; r < total_reps; ++r) block_third += std::abs(block0[r] * block0[r] * block0[r]);
  block_third /= total_reps;
  report.berry_esseen_bound =
      random_sum_bound(field.m_dependence(), 3.0, d, u_vol, report.sigma_n, block_third);

  const double mean_tol = 3.0 / std::sqrt(static_cast<double>(clt_reps));
  const double var_band = 3.0 * std::sqrt(2.0 / static_cast<double>(clt_reps));
  detail::add_assert(res.assertions, "clt/ks", report.ks_distance < ks_tol, report.ks_distance,
                     ks_tol);
  detail::add_assert(res.assertions, "clt/mean", std::abs(report.mean) <= mean_tol, report.mean,
                     mean_tol);
  detail::add_assert(res.assertions, "clt/variance", std::abs(report.variance - 1.0) <= var_band,
                     report.variance, var_band);

  res.rows_csv = "d,p,m,var_ratio,ks,mean,variance,qq_corr,berry_esseen_bound\n";
  res.rows_csv += detail::csv_row({std::to_string(d), std::to_string(p),
                                   detail::fmt(field.m_dependence()), detail::fmt(ratio),
                                   detail::fmt(report.ks_distance), detail::fmt(report.mean),
                                   detail::fmt(report.variance),
                                   detail::fmt(report.qq_correlation),
                                   detail::fmt(report.berry_esseen_bound)});
  res.qq_csv = detail::qq_csv_from(standardized);

  res.wall_seconds = timer.seconds();
  res.report["experiment"] = "clt-synthetic";
  res.report["config"] = cfg.raw;
  res.report["var_ratio"] = ratio;
  res.report["sigma_sq_formula"] = sigma_sq;
  res.report["ks"] = report.ks_distance;
  res.report["mean"] = report.mean;
  res.report["variance"] = report.variance;
  res.report["qq_correlation"] = report.qq_correlation;
  res.report["berry_esseen_bound"] = report.berry_esseen_bound;
  res.report["standardized"] = standardized;
  res.report["assertions"] = detail::assertions_json(res.assertions);
  res.report["wall_seconds"] = res.wall_seconds;
  res.report["all_pass"] = res.all_pass();
  return res;
}

// ---------------------------------------------------------------------------
// clt-entropy: the modified entropy estimator standardized by the estimated
// sigma_n over the m-ladder p_n = m_n^{4+delta}.
// ---------------------------------------------------------------------------
inline ExperimentResult run_clt_entropy(const ExperimentConfig& cfg) {
  detail::Timer timer;
  ExperimentResult res;
  const Manifold m = cfg.manifold();
  const KernelProfile kernel = cfg.kernel();
  const MarkDensity density = cfg.density();
  const int d = cfgutil::get_or<int>(cfg.raw, "d", 1);
  const std::vector<double> m_ladder =
      cfgutil::get_or<std::vector<double>>(cfg.raw, "m_ladder", {2.0, 3.0, 4.0});
  const double delta = cfgutil::get_or<double>(cfg.raw, "delta", 1.0);
  const int elog_reps = cfgutil::get_or<int>(cfg.raw, "elog_replications", 2000000);
  const int sigma_reps = cfgutil::get_or<int>(cfg.raw, "sigma_replications", 100000);
  const int lag_grid = cfgutil::get_or<int>(cfg.raw, "lag_grid", 5);
  const double a_const = cfgutil::get_or<double>(cfg.raw, "a", 1.0);
  const double ks_tol = cfgutil::get_or<double>(cfg.raw, "ks_tol", 0.10);
  const double mono_slack = cfgutil::get_or<double>(cfg.raw, "ks_monotone_slack", 0.02);
  const double qq_tol = cfgutil::get_or<double>(cfg.raw, "qq_corr_tol", 0.99);
  const std::vector<double> slope_grid = cfgutil::get_or<std::vector<double>>(
      cfg.raw, "rate_slope_grid", {64.0, 128.0, 256.0, 512.0});

  res.rows_csv =
      "m,p,Bn,Bp,b,sigma_sq,ks,mean,variance,qq_corr,e_abs3,rate_bound,floored_fraction\n";
  io::json rows = io::json::array();
  rng::Stream root(cfg.seed);

  std::vector<double> ks_values, e_abs3_values;
  std::vector<double> last_standardized;
  int rung = 0;
  for (double mn : m_ladder) {
    const double pn = std::pow(mn, 4.0 + delta);
    const BoxWindow bn = BoxWindow::cube(pn, d);
    const BoxWindow bp = BoxWindow::cube(mn, d);
    const double bn_vol = bn.volume(), bp_vol = bp.volume();

    double b = cfg.fixed_bandwidth;
    if (cfg.policy != BandwidthPolicy::Fixed || !(b > 0.0))
      throw input_error("clt-entropy requires a fixed bandwidth policy");

    EntropyConfig ec;
    ec.bn = bn;
    ec.bprime = bp;
    ec.kernel = kernel;
    ec.bandwidth = b;
    ec.r0 = cfg.r0;
    ec.lambda = cfg.lambda;
    ec.floor_log = cfg.floor_log;
    ec.validate(m);

    rng::Stream rung_root = root.derive(rung, 0xC17);
    const MeanSe elog = estimate_e_log_fhat(density, ec, elog_reps,
                                            rung_root.derive(1).next_u64(), cfg.threads);
    const SigmaEstimate sig = sigma_n_estimate(density, ec, sigma_reps, lag_grid,
                                               rung_root.derive(2).next_u64(), cfg.threads);
    const double sigma_n = std::sqrt(sig.sigma_sq);

    const BoxWindow sim_window = bn.dilated_by(bp);
    std::vector<double> stats_r(cfg.replications);
    std::vector<long> floored_r(cfg.replications);
    std::vector<long> points_r(cfg.replications);
    parallel_for(static_cast<std::size_t>(cfg.replications), cfg.threads, [&](std::size_t r) {
      rng::Stream sim = rung_root.derive(r, rng::kRoleProcess);
      rng::Stream sim_star = rung_root.derive(r, rng::kRoleProcessCopy);
      const MppSample psi = simulate_mpp(cfg.lambda, sim_window, density, sim.next_u64());
      const MppSample psi_star = simulate_mpp(cfg.lambda, bn, density, sim_star.next_u64());
      const EntropyEstimate est = entropy_estimate_modified(m, psi, psi_star, ec);
      const double mu = mu_hat(est.n_points, bn_vol, elog.mean, cfg.lambda);
      stats_r[r] = standardized_statistic(est.value, mu, sigma_n, bn_vol);
      floored_r[r] = est.floored_count;
      points_r[r] = est.n_points;
    });

    CltReport report;
    report.standardized = stats_r;
    report.finalize();
    report.sigma_n = sigma_n;
    report.m_n = mn;
    report.bn_vol = bn_vol;
    report.bprime_vol = bp_vol;
    report.berry_esseen_bound = clt_rate_bound(a_const, cfg.lambda, bp_vol, bn_vol, d);

    long floored_total = 0, points_total = 0;
    for (int r = 0; r < cfg.replications; ++r) {
      floored_total += floored_r[r];
      points_total += points_r[r];
    }
    const double floored_fraction =
        points_total == 0 ? 0.0 : static_cast<double>(floored_total) / points_total;

    const double mean_tol = 3.0 / std::sqrt(static_cast<double>(cfg.replications));
    const double var_band = 3.0 * std::sqrt(2.0 / static_cast<double>(cfg.replications));
    const std::string tag = "m=" + detail::fmt(mn);
    detail::add_assert(res.assertions, "clt-entropy/ks/" + tag, report.ks_distance < ks_tol,
                       report.ks_distance, ks_tol);
    detail::add_assert(res.assertions, "clt-entropy/sigma-positive/" + tag, sig.sigma_sq > 0.0,
                       sig.sigma_sq, 0.0);
    detail::add_assert(res.assertions, "clt-entropy/mean/" + tag,
                       std::abs(report.mean) <= mean_tol, report.mean, mean_tol);
    detail::add_assert(res.assertions, "clt-entropy/variance/" + tag,
                       std::abs(report.variance - 1.0) <= var_band, report.variance, var_band);
    detail::add_assert(res.assertions, "clt-entropy/qq-corr/" + tag,
                       report.qq_correlation > qq_tol, report.qq_correlation, qq_tol);

    ks_values.push_back(report.ks_distance);
    e_abs3_values.push_back(sig.third_abs_moment);
    last_standardized = stats_r;

    res.rows_csv += detail::csv_row(
        {detail::fmt(mn), detail::fmt(pn), detail::fmt(bn_vol), detail::fmt(bp_vol),
         detail::fmt(b), detail::fmt(sig.sigma_sq), detail::fmt(report.ks_distance),
         detail::fmt(report.mean), detail::fmt(report.variance),
         detail::fmt(report.qq_correlation), detail::fmt(sig.third_abs_moment),
         detail::fmt(report.berry_esseen_bound), detail::fmt(floored_fraction)});
    io::json row;
    row["m"] = mn;
    row["p"] = pn;
    row["b"] = b;
    row["sigma_sq"] = sig.sigma_sq;
    row["sigma_var_term"] = sig.var_term;
    row["sigma_cov_term"] = sig.cov_term;
    row["e_log_fhat"] = elog.mean;
    row["e_log_fhat_se"] = elog.se;
    row["ks"] = report.ks_distance;
    row["mean"] = report.mean;
    row["variance"] = report.variance;
    row["qq_correlation"] = report.qq_correlation;
    row["e_abs3"] = sig.third_abs_moment;
    row["rate_bound"] = report.berry_esseen_bound;
    row["floored_fraction"] = floored_fraction;
    rows.push_back(row);
    ++rung;
  }

  if (ks_values.size() >= 2) {
    detail::add_assert(res.assertions, "clt-entropy/ks-monotone",
                       ks_values.back() <= ks_values.front() + mono_slack, ks_values.back(),
                       ks_values.front() + mono_slack);
  }
  if (!e_abs3_values.empty()) {
    double lo = e_abs3_values[0], hi = e_abs3_values[0];
    for (double v : e_abs3_values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    detail::add_assert(res.assertions, "clt-entropy/third-moment-bounded", hi <= 2.0 * lo, hi,
                       2.0 * lo, "max over min of E|X|^3 across rungs");
  }

  // Decay order of the rate bound along p_n = m_n^{4+delta}, exact arithmetic.
  {
    std::vector<double> bounds(slope_grid.size());
    for (std::size_t i = 0; i < slope_grid.size(); ++i) {
      const double mn = slope_grid[i];
      bounds[i] = clt_rate_bound(a_const, cfg.lambda, math::ipow(mn, d),
                                 math::ipow(std::pow(mn, 4.0 + delta), d), d);
    }
    const auto fit = stats::loglog_slope(slope_grid, bounds);
    const double target = -delta * d / 2.0;
    detail::add_assert(res.assertions, "clt-entropy/rate-slope",
                       std::abs(fit.slope - target) <= 0.05, fit.slope, target,
                       "log-log slope of the rate bound");
    res.report["rate_slope"] = fit.slope;
    res.report["rate_slope_target"] = target;
  }

  res.qq_csv = detail::qq_csv_from(last_standardized);
  res.wall_seconds = timer.seconds();
  res.report["experiment"] = "clt-entropy";
  res.report["config"] = cfg.raw;
  res.report["rows"] = rows;
  res.report["standardized_last_rung"] = last_standardized;
  res.report["assertions"] = detail::assertions_json(res.assertions);
  res.report["wall_seconds"] = res.wall_seconds;
  res.report["all_pass"] = res.all_pass();
  return res;
}

}  // namespace markent
