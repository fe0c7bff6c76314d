#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "partmotion/model/config.hpp"

namespace partmotion::train {

struct GradCheckGroup {
  std::string name;
  int entries_checked = 0;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;  // one per parameter group
  double max_rel_err = 0.0;
  int total_entries = 0;
};

// Compares the analytic gradient of training_loss ∘ forward against central
// finite differences in double precision, probing `entries_per_group`
// coordinates of every parameter group at a generic configuration
// (seed-perturbed parameters, random clouds and poses). `perturb_scale` = 0
// probes the raw initialization instead.
GradCheckReport grad_check(const model::ModelConfig& cfg, std::uint64_t seed,
                           int entries_per_group = 5, double fd_step = 1e-5,
                           double perturb_scale = 0.05);

}  // namespace partmotion::train
