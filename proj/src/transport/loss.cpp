#include "partmotion/transport/loss.hpp"

#include <stdexcept>

#include "partmotion/transport/assignment.hpp"
#include "partmotion/transport/sinkhorn.hpp"

namespace partmotion::transport {

void LossConfig::validate() const {
  if (movable_weight < 0.0) {
    throw std::invalid_argument("LossConfig: movable_weight must be >= 0");
  }
  if (sinkhorn_epsilon <= 0.0) {
    throw std::invalid_argument("LossConfig: sinkhorn_epsilon must be > 0");
  }
  if (sinkhorn_iters <= 0 || exact_size_cap <= 0) {
    throw std::invalid_argument("LossConfig: iteration/cap fields must be > 0");
  }
}

namespace {

using Grad = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// One EMD term and (optionally) its fixed-matching gradient, scattered into
// grad via `rows` (subset row index -> full row index).
double emd_term(const PointCloud& a, const PointCloud& b, const LossConfig& cfg,
                const std::vector<int>* rows, Grad* grad, double weight) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  const auto scatter = [&](Eigen::Index i) {
    return rows ? (*rows)[static_cast<std::size_t>(i)] : static_cast<int>(i);
  };
  if (cfg.mode == LossMode::exact_assignment) {
    const AssignmentResult res = emd_exact(a, b, cfg.exact_size_cap);
    if (grad != nullptr) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 diff =
            (a.row(i) - b.row(res.permutation[static_cast<std::size_t>(i)]))
                .transpose();
        const double d = diff.norm();
        if (d > 1e-30) {
          grad->row(scatter(i)) +=
              (weight / static_cast<double>(n)) * (diff / d).transpose();
        }
      }
    }
    return res.cost;
  }
  const SinkhornResult res =
      emd_sinkhorn(a, b, cfg.sinkhorn_epsilon, cfg.sinkhorn_iters);
  if (grad != nullptr) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec3 g = Vec3::Zero();
      for (Eigen::Index j = 0; j < n; ++j) {
        const Vec3 diff = (a.row(i) - b.row(j)).transpose();
        const double d = diff.norm();
        if (d > 1e-30) g += res.plan(i, j) * diff / d;
      }
      grad->row(scatter(i)) += weight * g.transpose();
    }
  }
  return res.cost;
}

LossValue loss_impl(const PointCloud& pred, const PointCloud& target,
                    const Mask& movable, const LossConfig& cfg, Grad* grad) {
  cfg.validate();
  if (pred.rows() != target.rows()) {
    throw std::invalid_argument("training_loss: size mismatch");
  }
  if (movable.size() != static_cast<std::size_t>(pred.rows())) {
    throw std::invalid_argument("training_loss: mask size mismatch");
  }
  if (grad != nullptr) {
    grad->setZero(pred.rows(), 3);
  }
  LossValue out;
  out.full_term = emd_term(pred, target, cfg, nullptr, grad, 1.0);

  const int m = count_mask(movable);
  if (m > 0 && cfg.movable_weight > 0.0) {
    PointCloud pm(m, 3), tm(m, 3);
    std::vector<int> rows(static_cast<std::size_t>(m));
    int r = 0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      if (!movable[static_cast<std::size_t>(i)]) continue;
      pm.row(r) = pred.row(i);
      tm.row(r) = target.row(i);
      rows[static_cast<std::size_t>(r)] = static_cast<int>(i);
      ++r;
    }
    out.movable_term =
        emd_term(pm, tm, cfg, &rows, grad, cfg.movable_weight);
  }
  out.value = out.full_term + cfg.movable_weight * out.movable_term;
  return out;
}

}  // namespace

LossValue training_loss(const PointCloud& pred, const PointCloud& target,
                        const Mask& movable, const LossConfig& cfg) {
  return loss_impl(pred, target, movable, cfg, nullptr);
}

LossValue training_loss_grad(const PointCloud& pred, const PointCloud& target,
                             const Mask& movable, const LossConfig& cfg,
                             Grad& grad_out) {
  return loss_impl(pred, target, movable, cfg, &grad_out);
}

std::string to_string(LossMode mode) {
  return mode == LossMode::exact_assignment ? "exact_assignment" : "sinkhorn";
}

LossMode loss_mode_from_string(const std::string& s) {
  if (s == "exact_assignment") return LossMode::exact_assignment;
  if (s == "sinkhorn") return LossMode::sinkhorn;
  throw std::invalid_argument("unknown loss mode: " + s);
}

}  // namespace partmotion::transport
