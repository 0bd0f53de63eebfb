#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "markent/entropy.hpp"
#include "markent/experiment_config.hpp"
#include "markent/experiments_common.hpp"
#include "markent/parallel.hpp"
#include "markent/point_process.hpp"
#include "markent/rng.hpp"

namespace markent {

namespace detail {

inline double bandwidth_for_rung(const ExperimentConfig& cfg, const Manifold& m,
                                 const KernelProfile& kernel, const DensityConstants& consts,
                                 double cth, double bn_vol, double bp_vol) {
  const int p = m.dim();
  switch (cfg.policy) {
    case BandwidthPolicy::Fixed:
      if (!(cfg.fixed_bandwidth > 0.0)) throw input_error("bandwidth policy 'fixed' needs b > 0");
      return cfg.fixed_bandwidth;
    case BandwidthPolicy::OptimalDensity:
      try {
        return optimal_bandwidth_density(p, cth, math::unit_ball_volume(p), kernel.k0(),
                                         consts.c2, kernel.k2(), m.total_volume(), cfg.lambda,
                                         bp_vol);
      } catch (const degenerate_error&) {
        return fallback_bandwidth_density(bp_vol, p);
      }
    case BandwidthPolicy::OptimalEntropy:
      try {
        return optimal_bandwidth_entropy(p, kernel.k0(), cth, m.total_volume(), consts.l2,
                                         cfg.lambda, bn_vol, bp_vol);
      } catch (const degenerate_error&) {
        return fallback_bandwidth_entropy(bn_vol, bp_vol, p);
      }
    case BandwidthPolicy::AsScheduleDelta:
      throw input_error("bandwidth policy 'as-schedule' is only valid in the as-schedule experiment");
  }
  throw internal_error("unreachable bandwidth policy");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// entropy-consistency: window ladder, estimator mean against the quadrature
// entropy and the L2 bound; also compares the modified estimator against the
// original on the first rung.
// ---------------------------------------------------------------------------
inline ExperimentResult run_entropy_consistency(const ExperimentConfig& cfg) {
  detail::Timer timer;
  ExperimentResult res;
  const Manifold m = cfg.manifold();
  const KernelProfile kernel = cfg.kernel();
  const MarkDensity density = cfg.density();
  const DensityConstants consts = density.constants();
  const double cth = c_theta(m, cfg.r0);
  const int p = m.dim();
  const int d = cfgutil::get_or<int>(cfg.raw, "d", 2);

  io::json ladder_spec = cfg.raw.contains("ladder")
                             ? cfg.raw.at("ladder")
                             : io::json::parse(R"([{"Bn":400,"Bp":25},
                                                  {"Bn":1600,"Bp":100},
                                                  {"Bn":6400,"Bp":400}])");
  const double final_tol = cfgutil::get_or<double>(cfg.raw, "final_abs_tol", 0.05);
  const bool check_modified = cfgutil::get_or<bool>(cfg.raw, "check_modified", true);

  const double true_value = true_entropy(density);
  res.report["true_entropy"] = true_value;

  res.rows_csv = "rung,Bn,Bp,b,mean,se,true,abs_error,sqrt_bound,floored,pass\n";
  io::json rows = io::json::array();
  rng::Stream root(cfg.seed);

  std::vector<double> abs_errors, ses;
  int rung = 0;
  for (const auto& spec : ladder_spec) {
    const double bn_vol = cfgutil::require<double>(spec, "Bn");
    const double bp_vol = cfgutil::require<double>(spec, "Bp");
    const BoxWindow bn = BoxWindow::cube(std::pow(bn_vol, 1.0 / d), d);
    const BoxWindow bp = BoxWindow::cube(std::pow(bp_vol, 1.0 / d), d);
    const double b = detail::bandwidth_for_rung(cfg, m, kernel, consts, cth, bn_vol, bp_vol);

    EntropyConfig ec;
    ec.bn = bn;
    ec.bprime = bp;
    ec.kernel = kernel;
    ec.bandwidth = b;
    ec.r0 = cfg.r0;
    ec.lambda = cfg.lambda;
    ec.floor_log = cfg.floor_log;
    ec.validate(m);

    const BoxWindow sim_window = bn.dilated_by(bp);
    std::vector<double> values(cfg.replications);
    std::vector<long> floored(cfg.replications);
    parallel_for(static_cast<std::size_t>(cfg.replications), cfg.threads, [&](std::size_t r) {
      rng::Stream sim = root.derive(r + 1000000 * (rung + 1), rng::kRoleProcess);
      const MppSample s = simulate_mpp(cfg.lambda, sim_window, density, sim.next_u64());
      const EntropyEstimate est = entropy_estimate(m, s, ec);
      values[r] = est.value;
      floored[r] = est.floored_count;
    });

    const double mean = stats::mean(values);
    const double se = stats::se_of_mean(values);
    const double abs_err = std::abs(mean - true_value);
    const double bound = entropy_l2_bound(kernel.k0(), cth, m.total_volume(), cfg.lambda, bn_vol,
                                          bp_vol, b, p, consts.l1, consts.l2);
    long floored_total = 0;
    for (long f : floored) floored_total += f;

    const bool below = abs_err <= std::sqrt(bound) + 3.0 * se;
    detail::add_assert(res.assertions, "entropy/below-bound/rung" + std::to_string(rung), below,
                       abs_err, std::sqrt(bound) + 3.0 * se);
    detail::add_assert(res.assertions, "entropy/no-flooring/rung" + std::to_string(rung),
                       floored_total == 0, static_cast<double>(floored_total), 0.0);
    abs_errors.push_back(abs_err);
    ses.push_back(se);

    res.rows_csv += detail::csv_row(
        {std::to_string(rung), detail::fmt(bn_vol), detail::fmt(bp_vol), detail::fmt(b),
         detail::fmt(mean), detail::fmt(se), detail::fmt(true_value), detail::fmt(abs_err),
         detail::fmt(std::sqrt(bound)), std::to_string(floored_total), below ? "1" : "0"});
    io::json row;
    row["rung"] = rung;
    row["Bn"] = bn_vol;
    row["Bp"] = bp_vol;
    row["b"] = b;
    row["mean"] = mean;
    row["se"] = se;
    row["true"] = true_value;
    row["abs_error"] = abs_err;
    row["bound"] = bound;
    row["floored"] = floored_total;
    rows.push_back(row);

    // modified-vs-original comparison on the first rung
    if (check_modified && rung == 0) {
      std::vector<double> mod_values(cfg.replications);
      parallel_for(static_cast<std::size_t>(cfg.replications), cfg.threads, [&](std::size_t r) {
        rng::Stream sim = root.derive(r, rng::kRoleProcess);
        rng::Stream sim_star = root.derive(r, rng::kRoleProcessCopy);
        const MppSample psi = simulate_mpp(cfg.lambda, sim_window, density, sim.next_u64());
        const MppSample psi_star = simulate_mpp(cfg.lambda, bn, density, sim_star.next_u64());
        mod_values[r] = entropy_estimate_modified(m, psi, psi_star, ec).value;
      });
      const double mod_mean = stats::mean(mod_values);
      const double combined_se = std::hypot(se, stats::se_of_mean(mod_values));
      const double gap = std::abs(mod_mean - mean);
      detail::add_assert(res.assertions, "entropy/modified-vs-original", gap <= 3.0 * combined_se,
                         gap, 3.0 * combined_se);
      res.report["modified_mean_rung0"] = mod_mean;
    }
    ++rung;
  }

  bool decreasing = true;
  for (std::size_t i = 1; i < abs_errors.size(); ++i)
    if (abs_errors[i] >= abs_errors[i - 1]) decreasing = false;
  detail::add_assert(res.assertions, "entropy/error-decreasing", decreasing,
                     abs_errors.empty() ? 0.0 : abs_errors.back(), 0.0);
  if (!abs_errors.empty())
    detail::add_assert(res.assertions, "entropy/final-error", abs_errors.back() < final_tol,
                       abs_errors.back(), final_tol);

  res.wall_seconds = timer.seconds();
  res.report["experiment"] = "entropy-consistency";
  res.report["config"] = cfg.raw;
  res.report["rows"] = rows;
  res.report["assertions"] = detail::assertions_json(res.assertions);
  res.report["wall_seconds"] = res.wall_seconds;
  res.report["all_pass"] = res.all_pass();
  return res;
}

}  // namespace markent
