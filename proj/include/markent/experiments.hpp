#pragma once

#include "markent/experiments_clt.hpp"
#include "markent/experiments_common.hpp"
#include "markent/experiments_entropy.hpp"
#include "markent/experiments_kde.hpp"

namespace markent {

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::KernelAudit: return run_kernel_audit(cfg);
    case ExperimentKind::KdeConsistency: return run_kde_consistency(cfg);
    case ExperimentKind::EntropyConsistency: return run_entropy_consistency(cfg);
    case ExperimentKind::AsSchedule: return run_as_schedule(cfg);
    case ExperimentKind::CltSynthetic: return run_clt_synthetic(cfg);
    case ExperimentKind::CltEntropy: return run_clt_entropy(cfg);
  }
  throw internal_error("unreachable experiment dispatch");
}

}  // namespace markent
