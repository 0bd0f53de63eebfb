#pragma once

#include "markent/experiment_config.hpp"
#include "markent/experiments_common.hpp"
#include "markent/parallel.hpp"
#include "markent/point_process.hpp"
#include "markent/rng.hpp"

namespace markent {

// ---------------------------------------------------------------------------
// kernel-audit: geometry/kernel identity sweep over every supported
// (manifold, kernel) pair.
// ---------------------------------------------------------------------------
inline ExperimentResult run_kernel_audit(const ExperimentConfig& cfg) {
  detail::Timer timer;
  ExperimentResult res;
  const std::vector<double> bandwidths =
      cfgutil::get_or<std::vector<double>>(cfg.raw, "bandwidths", {0.1, 0.3});
  const double tol_quad = cfgutil::get_or<double>(cfg.raw, "tol_quadrature", 1e-4);
  const double tol_explog = cfgutil::get_or<double>(cfg.raw, "tol_explog", 1e-9);
  const int pairs = cfgutil::get_or<int>(cfg.raw, "explog_pairs", 1000);

  res.rows_csv = "manifold,kernel,b,unit_integral_error,volume_identity_error,"
                 "explog_error,kernel_mass_error,pass\n";
  io::json rows = io::json::array();

  for (const std::string& mtag : {"circle", "torus2", "sphere2", "sphere3"}) {
    const Manifold m = Manifold::from_tag(mtag);
    // exp/log inversion inside the injectivity radius
    rng::Stream rng(cfg.seed, {0xA0D17, std::hash<std::string>{}(mtag)});
    double explog_err = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const Point a = m.sample_uniform(rng);
      Point bpt = m.sample_uniform(rng);
      if (m.distance(a, bpt) >= m.injectivity_radius() - 0.1) {
        --i;
        continue;
      }
      const TangentVector v = m.log(a, bpt);
      const Point back = m.exp(v);
      explog_err = std::max(explog_err, m.distance(back, bpt));
      explog_err = std::max(explog_err, std::abs(v.norm() - m.distance(a, bpt)));
    }

    for (const std::string& ktag : {"epanechnikov", "triweight", "uniform"}) {
      const KernelProfile kernel = KernelProfile::from_tag(ktag, m.dim());
      const double mass_err = std::abs(kernel.moment(0) - 1.0);
      for (double b : bandwidths) {
        const double unit = detail::ball_integral_at_pole(
            m, b, 200, [&](const Point& z) {
              return fn_weight(m, kernel, b, detail::canonical_pole(m), z);
            });
        const double vol = detail::ball_integral_at_pole(
            m, b, 200, [&](const Point& z) {
              return 1.0 / m.volume_density(detail::canonical_pole(m), z);
            });
        const double unit_err = std::abs(unit - 1.0);
        const double vol_err = std::abs(vol - math::ipow(b, m.dim()) *
                                                  math::unit_ball_volume(m.dim()));
        const bool pass = unit_err < tol_quad && vol_err < tol_quad &&
                          explog_err < tol_explog && mass_err < 1e-10;
        detail::add_assert(res.assertions,
                           mtag + "/" + ktag + "/b=" + detail::fmt(b) + "/unit-integral",
                           unit_err < tol_quad, unit_err, tol_quad);
        detail::add_assert(res.assertions,
                           mtag + "/" + ktag + "/b=" + detail::fmt(b) + "/volume-identity",
                           vol_err < tol_quad, vol_err, tol_quad);
        res.rows_csv += detail::csv_row({mtag, ktag, detail::fmt(b), detail::fmt(unit_err),
                                         detail::fmt(vol_err), detail::fmt(explog_err),
                                         detail::fmt(mass_err), pass ? "1" : "0"});
        io::json row;
        row["manifold"] = mtag;
        row["kernel"] = ktag;
        row["b"] = b;
        row["unit_integral_error"] = unit_err;
        row["volume_identity_error"] = vol_err;
        row["explog_error"] = explog_err;
        row["kernel_mass_error"] = mass_err;
        row["pass"] = pass;
        rows.push_back(row);
      }
    }
    detail::add_assert(res.assertions, mtag + "/explog-roundtrip", explog_err < tol_explog,
                       explog_err, tol_explog);
  }

  res.wall_seconds = timer.seconds();
  res.report["experiment"] = "kernel-audit";
  res.report["config"] = cfg.raw;
  res.report["rows"] = rows;
  res.report["assertions"] = detail::assertions_json(res.assertions);
  res.report["wall_seconds"] = res.wall_seconds;
  res.report["all_pass"] = res.all_pass();
  return res;
}

// ---------------------------------------------------------------------------
// kde-consistency: bias rate against the Campbell-theorem oracle, the Poisson
// variance identity, and the L2 ladder against the mean-ISE bound.
// ---------------------------------------------------------------------------
inline ExperimentResult run_kde_consistency(const ExperimentConfig& cfg) {
  detail::Timer timer;
  ExperimentResult res;
  const Manifold m = cfg.manifold();
  const KernelProfile kernel = cfg.kernel();
  const MarkDensity density = cfg.density();
  const DensityConstants consts = density.constants();
  const double cth = c_theta(m, cfg.r0);
  const int p = m.dim();
  const int d = cfgutil::get_or<int>(cfg.raw, "d", 2);

  const std::vector<double> b_ladder =
      cfgutil::get_or<std::vector<double>>(cfg.raw, "bias_bandwidths", {0.4, 0.2, 0.1, 0.05});
  const double bias_window_vol = cfgutil::get_or<double>(cfg.raw, "bias_window", 400.0);
  const int bias_reps = cfgutil::get_or<int>(cfg.raw, "bias_replications", 500);
  const int eta_grid_res = cfgutil::get_or<int>(cfg.raw, "eta_grid_resolution", 24);
  const int check_etas = cfgutil::get_or<int>(cfg.raw, "bound_check_etas", 20);

  const double var_bandwidth = cfgutil::get_or<double>(cfg.raw, "variance_bandwidth", 0.2);
  const int var_reps = cfgutil::get_or<int>(cfg.raw, "variance_replications", 2000);
  const int var_etas = cfgutil::get_or<int>(cfg.raw, "variance_etas", 5);
  const double var_tol = cfgutil::get_or<double>(cfg.raw, "variance_rel_tol", 0.15);

  const std::vector<double> l2_ladder =
      cfgutil::get_or<std::vector<double>>(cfg.raw, "l2_windows", {100.0, 1000.0, 10000.0});
  const int l2_reps = cfgutil::get_or<int>(cfg.raw, "l2_replications", 100);
  const int l2_grid_res = cfgutil::get_or<int>(cfg.raw, "l2_grid_resolution", 48);

  res.rows_csv = "section,label,b,value,oracle,bound,se,pass\n";
  io::json rows = io::json::array();
  rng::Stream root(cfg.seed);

  // --- bias rate ---
  {
    const BoxWindow window = BoxWindow::cube(std::pow(bias_window_vol, 1.0 / d), d);
    const auto eta_grid = m.quadrature_grid(eta_grid_res);
    std::vector<Point> check_pts;
    rng::Stream eta_rng = root.derive(0xE7A);
    for (int i = 0; i < check_etas; ++i) check_pts.push_back(m.sample_uniform(eta_rng));

    // quadrature bias field per bandwidth (also the matched-filter shape)
    std::vector<std::vector<double>> shape(b_ladder.size());
    std::vector<double> shape_norm(b_ladder.size());
    for (std::size_t bi = 0; bi < b_ladder.size(); ++bi) {
      shape[bi].resize(eta_grid.size());
      double n2 = 0.0;
      for (std::size_t gi = 0; gi < eta_grid.size(); ++gi) {
        const double qb = detail::expected_fhat(m, density, kernel, b_ladder[bi],
                                                eta_grid[gi].point) -
                          density.density(eta_grid[gi].point);
        shape[bi][gi] = qb;
        n2 += eta_grid[gi].weight * qb * qb;
      }
      shape_norm[bi] = std::sqrt(n2);
    }

    // Monte Carlo field of f-hat means over the grid and the check points
    const std::size_t total_pts = eta_grid.size() + check_pts.size();
    std::vector<std::vector<double>> mc_sum(b_ladder.size(),
                                            std::vector<double>(total_pts, 0.0));
    std::vector<std::vector<double>> mc_sq(b_ladder.size(),
                                           std::vector<double>(total_pts, 0.0));
    std::vector<std::vector<double>> rep_vals(bias_reps);
    parallel_for(static_cast<std::size_t>(bias_reps), cfg.threads, [&](std::size_t r) {
      rng::Stream sim = root.derive(r, rng::kRoleProcess);
      const MppSample s = simulate_mpp(cfg.lambda, window, density, sim.next_u64());
      std::vector<double>& vals = rep_vals[r];
      vals.resize(b_ladder.size() * total_pts);
      for (std::size_t bi = 0; bi < b_ladder.size(); ++bi) {
        KdeConfig kc{kernel, b_ladder[bi], cfg.r0, cfg.lambda, window};
        const KdeEngine engine(m, s, kc);
        for (std::size_t gi = 0; gi < eta_grid.size(); ++gi)
          vals[bi * total_pts + gi] = engine.evaluate(eta_grid[gi].point);
        for (std::size_t ci = 0; ci < check_pts.size(); ++ci)
          vals[bi * total_pts + eta_grid.size() + ci] = engine.evaluate(check_pts[ci]);
      }
    });
    for (int r = 0; r < bias_reps; ++r)
      for (std::size_t bi = 0; bi < b_ladder.size(); ++bi)
        for (std::size_t gi = 0; gi < total_pts; ++gi) {
          const double v = rep_vals[r][bi * total_pts + gi];
          mc_sum[bi][gi] += v;
          mc_sq[bi][gi] += v * v;
        }

    std::vector<double> mc_aggregate(b_ladder.size());
    for (std::size_t bi = 0; bi < b_ladder.size(); ++bi) {
      // matched-filter projection of the MC bias field onto the oracle shape
      double acc = 0.0;
      for (std::size_t gi = 0; gi < eta_grid.size(); ++gi) {
        const double mean = mc_sum[bi][gi] / bias_reps;
        acc += eta_grid[gi].weight * (mean - density.density(eta_grid[gi].point)) *
               (shape[bi][gi] / shape_norm[bi]);
      }
      mc_aggregate[bi] = std::abs(acc);

      // per-eta bound check at the dedicated check points
      const double bb = bias_bound(b_ladder[bi], consts.c2, kernel.k2());
      double worst_excess = -1e300;
      for (std::size_t ci = 0; ci < check_pts.size(); ++ci) {
        const std::size_t gi = eta_grid.size() + ci;
        const double mean = mc_sum[bi][gi] / bias_reps;
        const double var =
            (mc_sq[bi][gi] - mc_sum[bi][gi] * mc_sum[bi][gi] / bias_reps) / (bias_reps - 1);
        const double se = std::sqrt(std::max(var, 0.0) / bias_reps);
        const double excess = std::abs(mean - density.density(check_pts[ci])) - (bb + 3.0 * se);
        worst_excess = std::max(worst_excess, excess);
      }
      detail::add_assert(res.assertions, "bias/bound/b=" + detail::fmt(b_ladder[bi]),
                         worst_excess <= 0.0, worst_excess, 0.0,
                         "max over check etas of |bias| - (b^2 C2 K2 + 3 SE)");
      res.rows_csv += detail::csv_row({"bias", "aggregate", detail::fmt(b_ladder[bi]),
                                       detail::fmt(mc_aggregate[bi]),
                                       detail::fmt(shape_norm[bi]), detail::fmt(bb), "",
                                       worst_excess <= 0.0 ? "1" : "0"});
      io::json row;
      row["section"] = "bias";
      row["b"] = b_ladder[bi];
      row["mc_aggregate"] = mc_aggregate[bi];
      row["quadrature_aggregate"] = shape_norm[bi];
      row["bias_bound"] = bb;
      rows.push_back(row);
    }
    const auto fit_mc = stats::loglog_slope(b_ladder, mc_aggregate);
    const auto fit_qd = stats::loglog_slope(b_ladder, shape_norm);
    const double lo = cfgutil::get_or<double>(cfg.raw, "bias_slope_lo", 1.6);
    const double hi = cfgutil::get_or<double>(cfg.raw, "bias_slope_hi", 2.4);
    detail::add_assert(res.assertions, "bias/loglog-slope-mc",
                       fit_mc.slope >= lo && fit_mc.slope <= hi, fit_mc.slope, hi,
                       "expected in [" + detail::fmt(lo) + "," + detail::fmt(hi) + "]");
    detail::add_assert(res.assertions, "bias/loglog-slope-quadrature",
                       fit_qd.slope >= lo && fit_qd.slope <= hi, fit_qd.slope, hi);
    res.report["bias_slope_mc"] = fit_mc.slope;
    res.report["bias_slope_quadrature"] = fit_qd.slope;
  }

  // --- variance identity ---
  {
    const BoxWindow window = BoxWindow::cube(std::pow(bias_window_vol, 1.0 / d), d);
    KdeConfig kc{kernel, var_bandwidth, cfg.r0, cfg.lambda, window};
    rng::Stream eta_rng = root.derive(0xE7B);
    std::vector<Point> etas;
    for (int i = 0; i < var_etas; ++i) etas.push_back(m.sample_uniform(eta_rng));
    std::vector<std::vector<double>> vals(var_etas, std::vector<double>(var_reps));
    parallel_for(static_cast<std::size_t>(var_reps), cfg.threads, [&](std::size_t r) {
      rng::Stream sim = root.derive(r, rng::kRoleProcessCopy);
      const MppSample s = simulate_mpp(cfg.lambda, window, density, sim.next_u64());
      const KdeEngine engine(m, s, kc);
      for (int e = 0; e < var_etas; ++e) vals[e][r] = engine.evaluate(etas[e]);
    });
    for (int e = 0; e < var_etas; ++e) {
      const double mc_var = stats::variance(vals[e]);
      const double oracle = detail::expected_fsq(m, density, kernel, var_bandwidth, etas[e]) /
                            (cfg.lambda * window.volume());
      const double rel = std::abs(mc_var / oracle - 1.0);
      detail::add_assert(res.assertions, "variance/identity/eta" + std::to_string(e),
                         rel <= var_tol, rel, var_tol);
      res.rows_csv += detail::csv_row({"variance", "eta" + std::to_string(e),
                                       detail::fmt(var_bandwidth), detail::fmt(mc_var),
                                       detail::fmt(oracle), "", "",
                                       rel <= var_tol ? "1" : "0"});
      io::json row;
      row["section"] = "variance";
      row["eta"] = e;
      row["mc_variance"] = mc_var;
      row["oracle"] = oracle;
      row["rel_error"] = rel;
      rows.push_back(row);
    }
  }

  // --- L2 ladder ---
  {
    const auto grid = m.quadrature_grid(l2_grid_res);
    std::vector<double> l2_means;
    std::vector<double> l2_bounds;
    for (std::size_t rung = 0; rung < l2_ladder.size(); ++rung) {
      const double bp_vol = l2_ladder[rung];
      const BoxWindow window = BoxWindow::cube(std::pow(bp_vol, 1.0 / d), d);
      double b;
      try {
        b = optimal_bandwidth_density(p, cth, math::unit_ball_volume(p), kernel.k0(), consts.c2,
                                      kernel.k2(), m.total_volume(), cfg.lambda, bp_vol);
      } catch (const degenerate_error&) {
        b = fallback_bandwidth_density(bp_vol, p);
      }
      KdeConfig kc{kernel, b, cfg.r0, cfg.lambda, window};
      std::vector<double> ise(l2_reps);
      parallel_for(static_cast<std::size_t>(l2_reps), cfg.threads, [&](std::size_t r) {
        rng::Stream sim = root.derive(r + 1000000 * (rung + 1), rng::kRoleProcess);
        const MppSample s = simulate_mpp(cfg.lambda, window, density, sim.next_u64());
        const KdeEngine engine(m, s, kc);
        double acc = 0.0;
        for (const auto& node : grid) {
          const double diff = engine.evaluate(node.point) - density.density(node.point);
          acc += node.weight * diff * diff;
        }
        ise[r] = acc;
      });
      const double mean_ise = stats::mean(ise);
      const double bound = l2_bound(cth, math::unit_ball_volume(p), kernel.k0(), cfg.lambda,
                                    bp_vol, b, p, consts.c2, kernel.k2(), m.total_volume());
      l2_means.push_back(mean_ise);
      l2_bounds.push_back(bound);
      detail::add_assert(res.assertions, "l2/below-bound/Bp=" + detail::fmt(bp_vol),
                         mean_ise <= bound, mean_ise, bound);
      res.rows_csv += detail::csv_row({"l2", "Bp=" + detail::fmt(bp_vol), detail::fmt(b),
                                       detail::fmt(mean_ise), "", detail::fmt(bound),
                                       detail::fmt(stats::se_of_mean(ise)),
                                       mean_ise <= bound ? "1" : "0"});
      io::json row;
      row["section"] = "l2";
      row["bprime_vol"] = bp_vol;
      row["b"] = b;
      row["mean_ise"] = mean_ise;
      row["bound"] = bound;
      rows.push_back(row);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < l2_means.size(); ++i)
      if (l2_means[i] >= l2_means[i - 1]) monotone = false;
    detail::add_assert(res.assertions, "l2/monotone-decreasing", monotone,
                       l2_means.empty() ? 0.0 : l2_means.back(), 0.0);
  }

  res.wall_seconds = timer.seconds();
  res.report["experiment"] = "kde-consistency";
  res.report["config"] = cfg.raw;
  res.report["rows"] = rows;
  res.report["assertions"] = detail::assertions_json(res.assertions);
  res.report["wall_seconds"] = res.wall_seconds;
  res.report["all_pass"] = res.all_pass();
  return res;
}

// ---------------------------------------------------------------------------
// as-schedule: pointwise errors along the almost-sure consistency schedule
// b_n = n^{-(1+delta)/4}/log(n+1), |B'_n| minimal with b_n^p |B'_n| > n^{1+delta}.
// ---------------------------------------------------------------------------
inline ExperimentResult run_as_schedule(const ExperimentConfig& cfg) {
  detail::Timer timer;
  ExperimentResult res;
  const Manifold m = cfg.manifold();
  const KernelProfile kernel = cfg.kernel();
  const MarkDensity density = cfg.density();
  const int p = m.dim();
  const int d = cfgutil::get_or<int>(cfg.raw, "d", 1);
  const std::vector<long> n_ladder =
      cfgutil::get_or<std::vector<long>>(cfg.raw, "n_ladder", {4, 16, 64});
  const int eval_etas = cfgutil::get_or<int>(cfg.raw, "eval_etas", 5);
  const int reps = cfgutil::get_or<int>(cfg.raw, "replications", 20);

  rng::Stream root(cfg.seed);
  rng::Stream eta_rng = root.derive(0xA5);
  std::vector<Point> etas;
  for (int i = 0; i < eval_etas; ++i) etas.push_back(m.sample_uniform(eta_rng));

  res.rows_csv = "n,b,Bp,bp_condition,max_error\n";
  io::json rows = io::json::array();
  std::vector<double> max_errors;
  for (std::size_t rung = 0; rung < n_ladder.size(); ++rung) {
    const long n = n_ladder[rung];
    const ConsistencySchedule sched = as_consistency_schedule(cfg.delta, n, p, d);
    const double condition = math::ipow(sched.bandwidth, p) * sched.bprime_vol;
    const double threshold = std::pow(static_cast<double>(n), 1.0 + cfg.delta);
    detail::add_assert(res.assertions, "schedule/condition/n=" + std::to_string(n),
                       condition > threshold, condition, threshold,
                       "b^p |B'| must exceed n^(1+delta)");

    const BoxWindow window = BoxWindow::cube(sched.bprime_side, d);
    KdeConfig kc{kernel, sched.bandwidth, cfg.r0, cfg.lambda, window};
    std::vector<double> errs(reps);
    parallel_for(static_cast<std::size_t>(reps), cfg.threads, [&](std::size_t r) {
      rng::Stream sim = root.derive(r + 4096 * (rung + 1), rng::kRoleProcess);
      const MppSample s = simulate_mpp(cfg.lambda, window, density, sim.next_u64());
      const KdeEngine engine(m, s, kc);
      double worst = 0.0;
      for (const auto& eta : etas)
        worst = std::max(worst, std::abs(engine.evaluate(eta) - density.density(eta)));
      errs[r] = worst;
    });
    const double mean_err = stats::mean(errs);
    max_errors.push_back(mean_err);
    res.rows_csv += detail::csv_row({std::to_string(n), detail::fmt(sched.bandwidth),
                                     detail::fmt(sched.bprime_vol), detail::fmt(condition),
                                     detail::fmt(mean_err)});
    io::json row;
    row["n"] = n;
    row["b"] = sched.bandwidth;
    row["Bp"] = sched.bprime_vol;
    row["condition"] = condition;
    row["mean_max_error"] = mean_err;
    rows.push_back(row);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < max_errors.size(); ++i)
    if (max_errors[i] >= max_errors[i - 1]) decreasing = false;
  detail::add_assert(res.assertions, "schedule/error-decreasing", decreasing,
                     max_errors.empty() ? 0.0 : max_errors.back(), 0.0);

  res.wall_seconds = timer.seconds();
  res.report["experiment"] = "as-schedule";
  res.report["config"] = cfg.raw;
  res.report["rows"] = rows;
  res.report["assertions"] = detail::assertions_json(res.assertions);
  res.report["wall_seconds"] = res.wall_seconds;
  res.report["all_pass"] = res.all_pass();
  return res;
}

}  // namespace markent
