#include "partmotion/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "partmotion/transport/assignment.hpp"
#include "partmotion/transport/metrics.hpp"
#include "partmotion/util/digest.hpp"

namespace partmotion::eval {

using synthgen::ArticulatedObject;
using synthgen::TrainingTuple;

int dominant_joint(const ArticulatedObject& obj) {
  int best = 0;
  int best_count = -1;
  for (int j = 0; j < obj.num_joints(); ++j) {
    const int c = count_mask(obj.per_joint_masks[static_cast<std::size_t>(j)]);
    if (c > best_count) {
      best_count = c;
      best = j;
    }
  }
  return best;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  a.median = median(values);
  if (!values.empty()) {
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(values.size());
  }
  return a;
}

namespace {

double pae_for_joint(const PointCloud& pred, const TrainingTuple& tup,
                     const ArticulatedObject& obj, int joint) {
  const auto& spec = obj.joints[static_cast<std::size_t>(joint)];
  const geom::RigidTransform gt =
      synthgen::joint_rigid_transform(spec, tup.phi1[joint], tup.phi3[joint]);
  const auto kind = spec.kind == synthgen::JointType::revolute
                        ? transport::JointKind::revolute
                        : transport::JointKind::prismatic;
  return transport::pae(pred, tup.i1,
                        obj.per_joint_masks[static_cast<std::size_t>(joint)],
                        gt, kind);
}

struct Selected {
  int object_index;
  int tuple_index;
};

std::vector<Selected> select_tuples(const synthgen::Dataset& dataset,
                                    const EvalOptions& options) {
  std::vector<Selected> out;
  for (std::size_t oi = 0; oi < dataset.objects.size(); ++oi) {
    const auto& entry = dataset.objects[oi];
    const int dj = dominant_joint(entry.object);
    for (std::size_t ti = 0; ti < entry.tuples.size(); ++ti) {
      const auto& tup = entry.tuples[ti];
      const double dphi = std::abs(tup.phi3[dj] - tup.phi1[dj]);
      if (dphi < options.min_dphi) continue;
      out.push_back({static_cast<int>(oi), static_cast<int>(ti)});
      if (options.max_tuples > 0 &&
          static_cast<int>(out.size()) >= options.max_tuples) {
        return out;
      }
    }
  }
  return out;
}

}  // namespace

MetricsReport evaluate_with(const Predictor& predictor,
                            const synthgen::Dataset& dataset,
                            const EvalOptions& options,
                            const std::string& config_hash) {
  if (dataset.total_tuples() == 0) {
    throw std::invalid_argument("evaluate: empty dataset");
  }
  const std::vector<Selected> picks = select_tuples(dataset, options);
  MetricsReport report;
  report.category = dataset.meta.category;
  report.config_hash = config_hash;
  report.count = static_cast<int>(picks.size());
  report.per_tuple.resize(picks.size());

  const auto eval_one = [&](std::size_t s) {
    const auto& entry = dataset.objects[static_cast<std::size_t>(
        picks[s].object_index)];
    const TrainingTuple& tup =
        entry.tuples[static_cast<std::size_t>(picks[s].tuple_index)];
    const ArticulatedObject& obj = entry.object;
    const int dj = dominant_joint(obj);

    TupleRecord rec;
    rec.object_index = picks[s].object_index;
    rec.tuple_index = picks[s].tuple_index;
    rec.dphi = std::abs(tup.phi3[dj] - tup.phi1[dj]);
    rec.revolute = obj.joints[static_cast<std::size_t>(dj)].kind ==
                   synthgen::JointType::revolute;

    const PointCloud pred = predictor(tup, obj);
    rec.emd = transport::emd_exact(pred, tup.i3).cost;
    rec.chamfer = transport::chamfer(pred, tup.i3);
    rec.pae = pae_for_joint(pred, tup, obj, dj);

    rec.base_emd = transport::emd_exact(tup.i1, tup.i3).cost;
    rec.base_chamfer = transport::chamfer(tup.i1, tup.i3);
    rec.base_pae = pae_for_joint(tup.i1, tup, obj, dj);

    if (options.per_joint_pae) {
      for (int j = 0; j < obj.num_joints(); ++j) {
        rec.pae_per_joint.push_back(pae_for_joint(pred, tup, obj, j));
      }
    }
    report.per_tuple[s] = std::move(rec);
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (std::size_t s = 0; s < picks.size(); ++s) eval_one(s);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < jobs; ++w) {
      threads.emplace_back([&, w] {
        for (std::size_t s = static_cast<std::size_t>(w); s < picks.size();
             s += static_cast<std::size_t>(jobs)) {
          eval_one(s);
        }
      });
    }
    for (auto& t : threads) t.join();
  }

  std::vector<double> emds, chams, paes, b_emds, b_chams, b_paes;
  for (const auto& r : report.per_tuple) {
    emds.push_back(r.emd);
    chams.push_back(r.chamfer);
    paes.push_back(r.pae);
    b_emds.push_back(r.base_emd);
    b_chams.push_back(r.base_chamfer);
    b_paes.push_back(r.base_pae);
  }
  report.aggregates["emd"] = aggregate_of(emds);
  report.aggregates["chamfer"] = aggregate_of(chams);
  report.aggregates["pae"] = aggregate_of(paes);
  report.baselines["emd"] = aggregate_of(b_emds);
  report.baselines["chamfer"] = aggregate_of(b_chams);
  report.baselines["pae"] = aggregate_of(b_paes);
  return report;
}

MetricsReport evaluate(const model::NetworkF& net,
                       const synthgen::Dataset& dataset,
                       const EvalOptions& options) {
  const std::string hash =
      to_hex(fnv1a64(to_json(net.config()).dump()));
  return evaluate_with(
      [&net](const TrainingTuple& tup, const ArticulatedObject&) {
        return net.forward(tup);
      },
      dataset, options, hash);
}

void attach_ablation(MetricsReport& report, const model::NetworkF& no_nir_net,
                     const synthgen::Dataset& dataset,
                     const EvalOptions& options) {
  if (no_nir_net.config().variant != model::ModelVariant::no_nir) {
    throw std::invalid_argument(
        "attach_ablation: network is not the no-NIR variant");
  }
  const MetricsReport ab = evaluate(no_nir_net, dataset, options);
  AblationBlock block;
  block.aggregates = ab.aggregates;
  for (const auto& r : ab.per_tuple) block.emd_per_tuple.push_back(r.emd);
  block.nir_lower_emd_median =
      report.aggregates.at("emd").median < block.aggregates.at("emd").median;
  report.ablation = std::move(block);
}

}  // namespace partmotion::eval
