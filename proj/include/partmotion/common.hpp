#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace partmotion {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// N x 3 positions, row-major. Row i is one point; ordering is meaningful
// (same index = same material point across poses of one object).
using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Per-joint articulation values: radians for revolute joints,
// object-length units for prismatic ones.
using PartPose = Eigen::VectorXd;

// 0/1 per point; 1 marks a movable point.
using Mask = std::vector<std::uint8_t>;

struct Box3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 size() const { return hi - lo; }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= lo.array() - tol).all() &&
           (p.array() <= hi.array() + tol).all();
  }
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
};

inline Box3 bounding_box(const PointCloud& cloud) {
  Box3 b;
  b.lo = cloud.colwise().minCoeff().transpose();
  b.hi = cloud.colwise().maxCoeff().transpose();
  return b;
}

inline bool all_finite(const PointCloud& cloud) {
  return cloud.allFinite();
}

inline int count_mask(const Mask& m) {
  int n = 0;
  for (auto v : m) n += v ? 1 : 0;
  return n;
}

}  // namespace partmotion
