#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "markent/errors.hpp"
#include "markent/kernel.hpp"
#include "markent/manifold.hpp"
#include "markent/mark_density.hpp"

namespace markent {

enum class ExperimentKind {
  KernelAudit,
  KdeConsistency,
  EntropyConsistency,
  AsSchedule,
  CltSynthetic,
  CltEntropy,
};

enum class BandwidthPolicy { OptimalDensity, OptimalEntropy, Fixed, AsScheduleDelta };

namespace cfgutil {

using json = nlohmann::ordered_json;

template <typename T>
T require(const json& j, const std::string& field) {
  if (!j.contains(field)) throw input_error("config: missing field '" + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error("config: field '" + field + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error("config: field '" + field + "': " + e.what());
  }
}

inline Point point_from(const json& arr, const std::string& field) {
  if (!arr.is_array() || arr.size() > 4)
    throw input_error("config: field '" + field + "' must be an array of at most 4 numbers");
  Point p{};
  for (std::size_t i = 0; i < arr.size(); ++i) p[i] = arr[i].get<double>();
  return p;
}

}  // namespace cfgutil

inline ExperimentKind experiment_kind_from_tag(const std::string& tag) {
  if (tag == "kernel-audit") return ExperimentKind::KernelAudit;
  if (tag == "kde-consistency") return ExperimentKind::KdeConsistency;
  if (tag == "entropy-consistency") return ExperimentKind::EntropyConsistency;
  if (tag == "as-schedule") return ExperimentKind::AsSchedule;
  if (tag == "clt-synthetic") return ExperimentKind::CltSynthetic;
  if (tag == "clt-entropy") return ExperimentKind::CltEntropy;
  throw input_error("unknown experiment kind '" + tag + "'");
}

inline std::string experiment_kind_tag(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::KernelAudit: return "kernel-audit";
    case ExperimentKind::KdeConsistency: return "kde-consistency";
    case ExperimentKind::EntropyConsistency: return "entropy-consistency";
    case ExperimentKind::AsSchedule: return "as-schedule";
    case ExperimentKind::CltSynthetic: return "clt-synthetic";
    case ExperimentKind::CltEntropy: return "clt-entropy";
  }
  throw internal_error("unreachable experiment kind");
}

inline BandwidthPolicy bandwidth_policy_from_tag(const std::string& tag) {
  if (tag == "optimal-density") return BandwidthPolicy::OptimalDensity;
  if (tag == "optimal-entropy") return BandwidthPolicy::OptimalEntropy;
  if (tag == "fixed") return BandwidthPolicy::Fixed;
  if (tag == "as-schedule") return BandwidthPolicy::AsScheduleDelta;
  throw input_error("unknown bandwidth policy '" + tag + "'");
}

// Density spec shared by every experiment config.
inline MarkDensity density_from_json(const Manifold& m, const cfgutil::json& j) {
  const std::string family = cfgutil::require<std::string>(j, "family");
  if (family == "uniform") return MarkDensity::uniform(m);
  if (family == "vmf") {
    return MarkDensity::vmf(m, cfgutil::point_from(j.at("mu"), "mu"),
                            cfgutil::require<double>(j, "kappa"));
  }
  if (family == "wrapped-normal") {
    return MarkDensity::wrapped_normal(m, cfgutil::require<double>(j, "mu"),
                                       cfgutil::require<double>(j, "rho"));
  }
  if (family == "mixture-vmf") {
    std::vector<Point> mus;
    for (const auto& a : j.at("mus")) mus.push_back(cfgutil::point_from(a, "mus"));
    return MarkDensity::mixture_vmf(m, mus, cfgutil::require<std::vector<double>>(j, "kappas"),
                                    cfgutil::require<std::vector<double>>(j, "weights"));
  }
  throw input_error("unknown density family '" + family + "'");
}

// Common experiment parameters; kind-specific settings stay in the raw JSON
// and are read by the matching runner.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::KernelAudit;
  std::string manifold_tag = "sphere2";
  std::string kernel_tag = "epanechnikov";
  cfgutil::json density_spec;
  double lambda = 1.0;
  double r0 = 1.5707963267948966;  // pi/2
  BandwidthPolicy policy = BandwidthPolicy::OptimalDensity;
  double fixed_bandwidth = 0.0;
  double delta = 0.5;
  int replications = 200;
  std::uint64_t seed = 20240101;
  double floor_log = -40.0;
  int threads = 0;
  cfgutil::json raw;

  static ExperimentConfig from_json(const cfgutil::json& j) {
    ExperimentConfig c;
    c.kind = experiment_kind_from_tag(cfgutil::require<std::string>(j, "experiment"));
    c.manifold_tag = cfgutil::get_or<std::string>(j, "manifold", c.manifold_tag);
    c.kernel_tag = cfgutil::get_or<std::string>(j, "kernel", c.kernel_tag);
    if (j.contains("density")) c.density_spec = j.at("density");
    c.lambda = cfgutil::get_or<double>(j, "lambda", c.lambda);
    c.r0 = cfgutil::get_or<double>(j, "r0", c.r0);
    if (j.contains("bandwidth")) {
      const auto& b = j.at("bandwidth");
      c.policy = bandwidth_policy_from_tag(cfgutil::require<std::string>(b, "policy"));
      c.fixed_bandwidth = cfgutil::get_or<double>(b, "b", 0.0);
      c.delta = cfgutil::get_or<double>(b, "delta", c.delta);
    }
    c.replications = cfgutil::get_or<int>(j, "replications", c.replications);
    c.seed = cfgutil::get_or<std::uint64_t>(j, "seed", c.seed);
    c.floor_log = cfgutil::get_or<double>(j, "floor_log", c.floor_log);
    c.threads = cfgutil::get_or<int>(j, "threads", 0);
    c.raw = j;
    return c;
  }

  Manifold manifold() const { return Manifold::from_tag(manifold_tag); }
  KernelProfile kernel() const { return KernelProfile::from_tag(kernel_tag, manifold().dim()); }
  MarkDensity density() const {
    if (density_spec.is_null()) throw input_error("config: missing 'density'");
    return density_from_json(manifold(), density_spec);
  }
};

}  // namespace markent
