#include "partmotion/transport/metrics.hpp"

#include <limits>
#include <stdexcept>

namespace partmotion::transport {

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw std::invalid_argument("chamfer: empty cloud");
  }
  double sum_ab = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    sum_ab += (b.rowwise() - a.row(i)).rowwise().norm().minCoeff();
  }
  double sum_ba = 0.0;
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    sum_ba += (a.rowwise() - b.row(j)).rowwise().norm().minCoeff();
  }
  return sum_ab / static_cast<double>(a.rows()) +
         sum_ba / static_cast<double>(b.rows());
}

double pae(const PointCloud& pred, const PointCloud& i1, const Mask& movable,
           const geom::RigidTransform& gt, JointKind kind) {
  if (pred.rows() != i1.rows() ||
      movable.size() != static_cast<std::size_t>(i1.rows())) {
    throw std::invalid_argument("pae: size mismatch");
  }
  const int m = count_mask(movable);
  if (m < 3) {
    throw std::invalid_argument("pae: fewer than 3 movable points");
  }
  PointCloud src(m, 3), dst(m, 3);
  int r = 0;
  for (Eigen::Index i = 0; i < i1.rows(); ++i) {
    if (!movable[static_cast<std::size_t>(i)]) continue;
    src.row(r) = i1.row(i);
    dst.row(r) = pred.row(i);
    ++r;
  }
  if (kind == JointKind::revolute) {
    const geom::RigidTransform fit = geom::kabsch_fit(src, dst);
    return geom::rotation_angle_deg(fit.R * gt.R.transpose());
  }
  // Prismatic: translation-only fit.
  const Vec3 t_fit =
      (dst.colwise().mean() - src.colwise().mean()).transpose();
  return (t_fit - gt.t).norm();
}

}  // namespace partmotion::transport
