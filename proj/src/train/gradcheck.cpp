#include "partmotion/train/gradcheck.hpp"

#include <cmath>

#include "partmotion/model/network.hpp"
#include "partmotion/transport/loss.hpp"
#include "partmotion/util/digest.hpp"
#include "partmotion/util/rng.hpp"

namespace partmotion::train {

using model::MatX;
using model::NetworkD;

namespace {

PointCloud random_cloud(Rng& rng, int n, double half_extent) {
  PointCloud c(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      c(i, a) = rng.uniform(-half_extent, half_extent);
    }
  }
  return c;
}

}  // namespace

GradCheckReport grad_check(const model::ModelConfig& cfg, std::uint64_t seed,
                           int entries_per_group, double fd_step,
                           double perturb_scale) {
  cfg.validate();
  NetworkD net = NetworkD::init(cfg, seed);
  if (perturb_scale > 0.0) {
    // Move off the zero-initialized head so every path carries gradient.
    Rng prng(mix_seed(seed, fnv1a64("gradcheck-perturb")));
    for (auto& [name, entry] : net.params()) {
      for (Eigen::Index r = 0; r < entry.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < entry.value.cols(); ++c) {
          entry.value(r, c) += perturb_scale * prng.normal();
        }
      }
    }
  }

  // A generic synthetic tuple; articulation structure is irrelevant here.
  Rng drng(mix_seed(seed, fnv1a64("gradcheck-data")));
  synthgen::TrainingTuple tup;
  tup.i1 = random_cloud(drng, cfg.n_points, 0.4);
  tup.i2 = random_cloud(drng, cfg.n_points, 0.4);
  tup.i3 = random_cloud(drng, cfg.n_points, 0.4);
  tup.phi1 = PartPose::Zero(cfg.num_joints);
  tup.phi2 = PartPose::Zero(cfg.num_joints);
  tup.phi3 = PartPose::Zero(cfg.num_joints);
  for (int j = 0; j < cfg.num_joints; ++j) {
    tup.phi1[j] = drng.uniform(0.0, 1.2);
    tup.phi2[j] = drng.uniform(0.0, 1.2);
    tup.phi3[j] = drng.uniform(0.0, 1.2);
  }
  tup.movable_mask.assign(static_cast<std::size_t>(cfg.n_points), 0);
  for (int i = 0; i < cfg.n_points / 2; ++i) {
    tup.movable_mask[static_cast<std::size_t>(i)] = 1;
  }

  transport::LossConfig loss_cfg;
  loss_cfg.mode = transport::LossMode::exact_assignment;
  loss_cfg.movable_weight = 2.0;

  const auto loss_at = [&]() {
    const PointCloud pred = net.forward(tup);
    return transport::training_loss(pred, tup.i3, tup.movable_mask, loss_cfg)
        .value;
  };

  // Analytic gradients.
  net.params().zero_grad();
  model::ForwardContext<double> ctx;
  const PointCloud pred = net.forward(tup, ctx);
  model::GradCloud dpred;
  transport::training_loss_grad(pred, tup.i3, tup.movable_mask, loss_cfg,
                                dpred);
  net.backward(ctx, dpred);

  GradCheckReport report;
  for (auto& [name, entry] : net.params()) {
    GradCheckGroup group;
    group.name = name;
    Rng erng(mix_seed(seed, fnv1a64(name)));
    const Eigen::Index size = entry.value.size();
    const int checks =
        std::min<Eigen::Index>(entries_per_group, size);
    for (int e = 0; e < checks; ++e) {
      const Eigen::Index flat =
          static_cast<Eigen::Index>(erng.uniform_int(
              static_cast<std::uint64_t>(size)));
      const Eigen::Index r = flat / entry.value.cols();
      const Eigen::Index c = flat % entry.value.cols();
      const double saved = entry.value(r, c);
      entry.value(r, c) = saved + fd_step;
      const double up = loss_at();
      entry.value(r, c) = saved - fd_step;
      const double down = loss_at();
      entry.value(r, c) = saved;
      const double fd = (up - down) / (2.0 * fd_step);
      const double analytic = entry.grad(r, c);
      double rel = 0.0;
      if (std::abs(fd) > 1e-12 || std::abs(analytic) > 1e-12) {
        rel = std::abs(analytic - fd) /
              std::max({std::abs(analytic), std::abs(fd), 1e-10});
      }
      group.max_rel_err = std::max(group.max_rel_err, rel);
      ++group.entries_checked;
      ++report.total_entries;
    }
    report.max_rel_err = std::max(report.max_rel_err, group.max_rel_err);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace partmotion::train
