#pragma once

#include <optional>

#include "partmotion/common.hpp"

namespace partmotion::geom {

struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }

  RigidTransform compose(const RigidTransform& inner) const {
    // this ∘ inner: first inner, then this.
    return {R * inner.R, R * inner.t + t};
  }

  RigidTransform inverse() const {
    return {R.transpose(), -(R.transpose() * t)};
  }

  Mat34 as_matrix() const {
    Mat34 m;
    m.leftCols<3>() = R;
    m.col(3) = t;
    return m;
  }

  static RigidTransform identity() { return {}; }
};

// ‖RᵀR − I‖_∞ < tol and det(R) > 0.
bool is_rotation(const Mat3& R, double tol = 1e-6);

// Rotation by angle (radians) about a unit axis.
Mat3 axis_angle_rotation(const Vec3& axis, double angle);

// Gram-Schmidt of two 3-vectors; third column by cross product.
// Throws std::invalid_argument on degenerate input.
Mat3 rotation_from_6d(const Eigen::Matrix<double, 6, 1>& v);

// Angle of a rotation in degrees, in [0, 180]. Throws std::invalid_argument
// if R is not a rotation.
double rotation_angle_deg(const Mat3& R);

// Weighted least-squares rigid fit mapping src onto dst, reflection excluded.
// Requires at least 3 non-collinear points with positive weight; throws
// std::invalid_argument otherwise.
RigidTransform kabsch_fit(const PointCloud& src, const PointCloud& dst,
                          const Eigen::VectorXd* weights = nullptr);

}  // namespace partmotion::geom
