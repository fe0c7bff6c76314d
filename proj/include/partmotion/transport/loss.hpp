#pragma once

#include <string>

#include "partmotion/common.hpp"

namespace partmotion::transport {

enum class LossMode { exact_assignment, sinkhorn };

struct LossConfig {
  LossMode mode = LossMode::exact_assignment;
  double movable_weight = 2.0;   // λ on the movable-part term
  double sinkhorn_epsilon = 0.05;
  int sinkhorn_iters = 300;
  int exact_size_cap = 2048;

  void validate() const;
};

struct LossValue {
  double value = 0.0;
  double full_term = 0.0;
  double movable_term = 0.0;
};

// loss = EMD(pred, target) + λ · EMD(pred[mask], target[mask]).
// `mask` is row-aligned with pred/target. An empty movable set contributes 0.
LossValue training_loss(const PointCloud& pred, const PointCloud& target,
                        const Mask& movable, const LossConfig& cfg);

// Same loss plus its gradient with respect to pred positions. In exact mode
// the optimal assignment is held fixed, which is the exact gradient almost
// everywhere (the assignment is locally constant); in sinkhorn mode the plan
// is held fixed. Coincident matched pairs contribute zero gradient.
LossValue training_loss_grad(const PointCloud& pred, const PointCloud& target,
                             const Mask& movable, const LossConfig& cfg,
                             Eigen::Matrix<double, Eigen::Dynamic, 3,
                                           Eigen::RowMajor>& grad_out);

std::string to_string(LossMode mode);
LossMode loss_mode_from_string(const std::string& s);

}  // namespace partmotion::transport
