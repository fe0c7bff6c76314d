#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "partmotion/model/network.hpp"
#include "partmotion/synthgen/dataset.hpp"

namespace partmotion::eval {

struct TupleRecord {
  int object_index = 0;
  int tuple_index = 0;
  double dphi = 0.0;  // dominant joint |phi3 - phi1| (rad or length units)
  bool revolute = true;
  double emd = 0.0, chamfer = 0.0, pae = 0.0;
  double base_emd = 0.0, base_chamfer = 0.0, base_pae = 0.0;
  std::vector<double> pae_per_joint;  // filled when requested
};

struct Aggregate {
  double median = 0.0;
  double mean = 0.0;
};

struct AblationBlock {
  std::map<std::string, Aggregate> aggregates;
  std::vector<double> emd_per_tuple;
  bool nir_lower_emd_median = false;  // directional claim, not a gate
};

// Every aggregate is recomputable from per_tuple; the report carries the
// per-tuple records for that audit.
struct MetricsReport {
  int version = 1;
  std::string category;
  std::string config_hash;
  int count = 0;
  std::vector<TupleRecord> per_tuple;
  std::map<std::string, Aggregate> aggregates;  // emd / chamfer / pae
  std::map<std::string, Aggregate> baselines;   // identity prediction
  std::optional<AblationBlock> ablation;
};

struct EvalOptions {
  double min_dphi = 0.0;  // skip tuples whose dominant-joint |Δφ| is smaller
  int max_tuples = 0;     // 0 = all
  int jobs = 1;
  bool per_joint_pae = false;
};

using Predictor = std::function<PointCloud(const synthgen::TrainingTuple&,
                                           const synthgen::ArticulatedObject&)>;

// Dominant joint = the one owning the most points.
int dominant_joint(const synthgen::ArticulatedObject& obj);

double median(std::vector<double> values);
Aggregate aggregate_of(const std::vector<double>& values);

// Per tuple: predictor -> exact EMD, Chamfer, PAE, plus the identity
// baseline on the same tuples. Read-only with respect to inputs.
MetricsReport evaluate_with(const Predictor& predictor,
                            const synthgen::Dataset& dataset,
                            const EvalOptions& options,
                            const std::string& config_hash);

MetricsReport evaluate(const model::NetworkF& net,
                       const synthgen::Dataset& dataset,
                       const EvalOptions& options);

// Evaluates the no-NIR network under the identical protocol and attaches the
// comparison block.
void attach_ablation(MetricsReport& report, const model::NetworkF& no_nir_net,
                     const synthgen::Dataset& dataset,
                     const EvalOptions& options);

}  // namespace partmotion::eval
