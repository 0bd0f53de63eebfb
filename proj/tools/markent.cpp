// Command line front door: simulate samples, run single estimates, run the
// Monte Carlo experiment suites, and audit the kernel/geometry identities.
// Everything is driven by JSON configs so runs are reproducible; outputs are
// written atomically under --out.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "markent/entropy.hpp"
#include "markent/experiments.hpp"
#include "markent/io.hpp"
#include "markent/kde.hpp"
#include "markent/point_process.hpp"

namespace fs = std::filesystem;
using markent::io::json;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  int threads = 0;
  int verbosity = 0;
};

json load_config(const GlobalOpts& opts) {
  if (opts.config_path.empty()) throw markent::input_error("missing --config");
  json cfg = markent::io::parse_json_file(opts.config_path);
  if (opts.has_seed_override) cfg["seed"] = opts.seed_override;
  if (opts.threads > 0) cfg["threads"] = opts.threads;
  return cfg;
}

void write_experiment_outputs(const markent::ExperimentResult& res, const fs::path& out) {
  markent::io::atomic_write(out / "result.json", res.report.dump(2) + "\n");
  markent::io::atomic_write(out / "rows.csv", res.rows_csv);
  if (!res.qq_csv.empty()) markent::io::atomic_write(out / "qq.csv", res.qq_csv);
}

int finish_experiment(const markent::ExperimentResult& res, const GlobalOpts& opts,
                      const fs::path& out) {
  write_experiment_outputs(res, out);
  int failed = 0;
  for (const auto& a : res.assertions) {
    if (!a.pass) ++failed;
    if (opts.verbosity > 0 || !a.pass)
      std::printf("%s  %s (value=%g threshold=%g)\n", a.pass ? "PASS" : "FAIL", a.name.c_str(),
                  a.value, a.threshold);
  }
  std::printf("%s: %zu assertions, %d failed, %.1fs; results in %s\n",
              res.all_pass() ? "OK" : "FAILED", res.assertions.size(), failed, res.wall_seconds,
              out.string().c_str());
  return res.all_pass() ? 0 : 1;
}

int cmd_simulate(const GlobalOpts& opts) {
  const json cfg = load_config(opts);
  const markent::Manifold m =
      markent::Manifold::from_tag(markent::cfgutil::require<std::string>(cfg, "manifold"));
  const markent::MarkDensity density = markent::density_from_json(m, cfg.at("density"));
  markent::BoxWindow window;
  window.origin = markent::cfgutil::get_or<std::vector<double>>(
      cfg.at("window"), "origin", std::vector<double>(cfg.at("window").at("side").size(), 0.0));
  window.side = markent::cfgutil::require<std::vector<double>>(cfg.at("window"), "side");
  const double lambda = markent::cfgutil::require<double>(cfg, "lambda");
  const std::uint64_t seed = markent::cfgutil::get_or<std::uint64_t>(cfg, "seed", 1);

  const markent::MppSample sample = markent::simulate_mpp(lambda, window, density, seed);
  const fs::path out(opts.out_dir);
  markent::io::write_sample(sample, out / "sample.csv", out / "sample.json");
  std::printf("simulated %zu points into %s\n", sample.size(), out.string().c_str());
  return 0;
}

int cmd_estimate_density(const GlobalOpts& opts) {
  const json cfg = load_config(opts);
  const fs::path out(opts.out_dir);
  const markent::MppSample sample =
      markent::io::read_sample(markent::cfgutil::require<std::string>(cfg, "sample_csv"),
                               markent::cfgutil::require<std::string>(cfg, "sample_json"));
  const markent::Manifold m = markent::Manifold::from_tag(sample.manifold_tag);
  markent::KdeConfig kc;
  kc.kernel = markent::KernelProfile::from_tag(
      markent::cfgutil::get_or<std::string>(cfg, "kernel", "epanechnikov"), m.dim());
  kc.bandwidth = markent::cfgutil::require<double>(cfg, "bandwidth");
  kc.r0 = markent::cfgutil::get_or<double>(cfg, "r0", 1.5707963267948966);
  kc.lambda = sample.lambda;
  if (cfg.contains("window")) {
    kc.window.origin = markent::cfgutil::require<std::vector<double>>(cfg.at("window"), "origin");
    kc.window.side = markent::cfgutil::require<std::vector<double>>(cfg.at("window"), "side");
  } else {
    kc.window = sample.window;
  }

  bool have_truth = cfg.contains("density");
  const markent::MarkDensity truth =
      have_truth ? markent::density_from_json(m, cfg.at("density")) : markent::MarkDensity::uniform(m);

  std::vector<markent::Point> etas;
  if (cfg.contains("eval") && cfg.at("eval").contains("points")) {
    for (const auto& arr : cfg.at("eval").at("points"))
      etas.push_back(markent::cfgutil::point_from(arr, "eval.points"));
  } else {
    const int res = cfg.contains("eval")
                        ? markent::cfgutil::get_or<int>(cfg.at("eval"), "grid_resolution", 16)
                        : 16;
    for (const auto& node : m.quadrature_grid(res)) etas.push_back(node.point);
  }

  const markent::KdeEngine engine(m, sample, kc);
  std::string csv;
  for (int k = 0; k < m.point_size(); ++k) csv += "eta" + std::to_string(k + 1) + ",";
  csv += "f_hat";
  if (have_truth) csv += ",f_true";
  csv += "\n";
  for (const auto& eta : etas) {
    for (int k = 0; k < m.point_size(); ++k) csv += markent::io::format_double(eta[k]) + ",";
    csv += markent::io::format_double(engine.evaluate(eta));
    if (have_truth) csv += "," + markent::io::format_double(truth.density(eta));
    csv += "\n";
  }
  markent::io::atomic_write(out / "density.csv", csv);
  std::printf("evaluated %zu points into %s\n", etas.size(), (out / "density.csv").c_str());
  return 0;
}

int cmd_estimate_entropy(const GlobalOpts& opts) {
  const json cfg = load_config(opts);
  const fs::path out(opts.out_dir);
  const markent::MppSample sample =
      markent::io::read_sample(markent::cfgutil::require<std::string>(cfg, "sample_csv"),
                               markent::cfgutil::require<std::string>(cfg, "sample_json"));
  const markent::Manifold m = markent::Manifold::from_tag(sample.manifold_tag);

  markent::EntropyConfig ec;
  ec.kernel = markent::KernelProfile::from_tag(
      markent::cfgutil::get_or<std::string>(cfg, "kernel", "epanechnikov"), m.dim());
  ec.bandwidth = markent::cfgutil::require<double>(cfg, "bandwidth");
  ec.r0 = markent::cfgutil::get_or<double>(cfg, "r0", 1.5707963267948966);
  ec.lambda = sample.lambda;
  ec.floor_log = markent::cfgutil::get_or<double>(cfg, "floor_log", -40.0);
  ec.bn.origin = markent::cfgutil::require<std::vector<double>>(cfg.at("Bn"), "origin");
  ec.bn.side = markent::cfgutil::require<std::vector<double>>(cfg.at("Bn"), "side");
  ec.bprime.origin = markent::cfgutil::require<std::vector<double>>(cfg.at("Bp"), "origin");
  ec.bprime.side = markent::cfgutil::require<std::vector<double>>(cfg.at("Bp"), "side");

  const markent::EntropyEstimate est = markent::entropy_estimate(m, sample, ec);

  json report;
  report["value"] = est.value;
  report["n_points"] = est.n_points;
  report["diagnostics"] = {{"floored_count", est.floored_count},
                           {"min_fhat", est.min_fhat},
                           {"floor_log", ec.floor_log}};
  if (cfg.contains("density")) {
    const markent::MarkDensity density = markent::density_from_json(m, cfg.at("density"));
    const markent::DensityConstants consts = density.constants();
    const double cth = markent::c_theta(m, ec.r0);
    json bounds;
    bounds["entropy_l2_bound"] = markent::entropy_l2_bound(
        ec.kernel.k0(), cth, m.total_volume(), ec.lambda, ec.bn.volume(), ec.bprime.volume(),
        ec.bandwidth, m.dim(), consts.l1, consts.l2);
    bounds["bias_bound"] = markent::bias_bound(ec.bandwidth, consts.c2, ec.kernel.k2());
    bounds["c_theta"] = cth;
    bounds["K0"] = ec.kernel.k0();
    bounds["K2"] = ec.kernel.k2();
    bounds["L1"] = consts.l1;
    bounds["L2"] = consts.l2;
    bounds["C2"] = consts.c2;
    bounds["true_entropy"] = markent::true_entropy(density);
    report["bound_report"] = bounds;
  }
  markent::io::atomic_write(out / "entropy.json", report.dump(2) + "\n");
  std::printf("entropy %.6f over %ld points; report in %s\n", est.value, est.n_points,
              (out / "entropy.json").c_str());
  return 0;
}

int cmd_experiment(const GlobalOpts& opts, const char* expected_kind = nullptr) {
  const json cfg_json = load_config(opts);
  const markent::ExperimentConfig cfg = markent::ExperimentConfig::from_json(cfg_json);
  if (expected_kind) {
    const std::string tag = markent::experiment_kind_tag(cfg.kind);
    if (tag.rfind(expected_kind, 0) != 0)
      throw markent::input_error(std::string("this subcommand expects a '") + expected_kind +
                                 "*' experiment config, got '" + tag + "'");
  }
  const markent::ExperimentResult res = markent::run_experiment(cfg);
  const fs::path out(opts.out_dir);
  if (cfg.kind == markent::ExperimentKind::CltSynthetic ||
      cfg.kind == markent::ExperimentKind::CltEntropy) {
    // standardized samples as a flat CSV next to the full report
    std::string csv = "standardized\n";
    const char* key = cfg.kind == markent::ExperimentKind::CltSynthetic
                          ? "standardized"
                          : "standardized_last_rung";
    if (res.report.contains(key))
      for (const auto& v : res.report.at(key))
        csv += markent::io::format_double(v.get<double>()) + "\n";
    markent::io::atomic_write(out / "standardized.csv", csv);
  }
  return finish_experiment(res, opts, out);
}

int cmd_audit(const GlobalOpts& opts) {
  json cfg_json;
  if (!opts.config_path.empty()) {
    cfg_json = load_config(opts);
  } else {
    cfg_json["experiment"] = "kernel-audit";
    cfg_json["seed"] = opts.has_seed_override ? opts.seed_override : 20240101u;
    if (opts.threads > 0) cfg_json["threads"] = opts.threads;
  }
  const markent::ExperimentConfig cfg = markent::ExperimentConfig::from_json(cfg_json);
  if (cfg.kind != markent::ExperimentKind::KernelAudit)
    throw markent::input_error("audit expects a kernel-audit config");
  return finish_experiment(markent::run_kernel_audit(cfg), opts, fs::path(opts.out_dir));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"marked point process entropy toolkit"};
  app.require_subcommand(1);

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "JSON config path")->capture_default_str();
  app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", opts.seed_override, "seed override (wins over config)");
  app.add_option("--threads", opts.threads, "worker cap (0 = auto)");
  app.add_flag("-v", opts.verbosity, "verbosity (repeat for more)");

  auto* sim = app.add_subcommand("simulate", "draw one marked point process sample");
  auto* est_d = app.add_subcommand("estimate-density", "evaluate the density estimator");
  auto* est_e = app.add_subcommand("estimate-entropy", "evaluate the entropy estimator");
  auto* clt = app.add_subcommand("clt", "run a CLT replication sweep");
  auto* exp = app.add_subcommand("experiment", "run any experiment suite");
  auto* audit = app.add_subcommand("audit", "kernel/geometry identity audit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  opts.has_seed_override = seed_opt->count() > 0;

  try {
    if (sim->parsed()) return cmd_simulate(opts);
    if (est_d->parsed()) return cmd_estimate_density(opts);
    if (est_e->parsed()) return cmd_estimate_entropy(opts);
    if (clt->parsed()) return cmd_experiment(opts, "clt-");
    if (exp->parsed()) return cmd_experiment(opts);
    if (audit->parsed()) return cmd_audit(opts);
  } catch (const markent::input_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const markent::geometry_domain_error& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 2;
  } catch (const markent::degenerate_error& e) {
    std::fprintf(stderr, "degenerate parameters: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 2;
}
