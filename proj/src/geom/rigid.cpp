#include "partmotion/geom/rigid.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace partmotion::geom {

bool is_rotation(const Mat3& R, double tol) {
  const Mat3 err = R.transpose() * R - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() < tol && R.determinant() > 0.0;
}

Mat3 axis_angle_rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

Mat3 rotation_from_6d(const Eigen::Matrix<double, 6, 1>& v) {
  const Vec3 a = v.head<3>();
  const Vec3 b = v.tail<3>();
  const double na = a.norm();
  if (na < 1e-12) {
    throw std::invalid_argument("rotation_from_6d: first 3-vector is zero");
  }
  const Vec3 b1 = a / na;
  const Vec3 r = b - b1.dot(b) * b1;
  const double nr = r.norm();
  if (nr < 1e-12) {
    throw std::invalid_argument(
        "rotation_from_6d: second 3-vector degenerate after orthogonalization");
  }
  const Vec3 b2 = r / nr;
  const Vec3 b3 = b1.cross(b2);
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b3;
  return R;
}

double rotation_angle_deg(const Mat3& R) {
  if (!is_rotation(R)) {
    throw std::invalid_argument("rotation_angle_deg: input is not a rotation");
  }
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

RigidTransform kabsch_fit(const PointCloud& src, const PointCloud& dst,
                          const Eigen::VectorXd* weights) {
  const Eigen::Index n = src.rows();
  if (dst.rows() != n) {
    throw std::invalid_argument("kabsch_fit: size mismatch");
  }
  Eigen::VectorXd w;
  if (weights != nullptr) {
    if (weights->size() != n) {
      throw std::invalid_argument("kabsch_fit: weight size mismatch");
    }
    if ((weights->array() < 0.0).any()) {
      throw std::invalid_argument("kabsch_fit: negative weight");
    }
    w = *weights;
  } else {
    w = Eigen::VectorXd::Ones(n);
  }

  int positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] > 0.0) ++positive;
  }
  const double wsum = w.sum();
  if (positive < 3 || wsum <= 0.0) {
    throw std::invalid_argument("kabsch_fit: fewer than 3 weighted points");
  }

  const Vec3 cs = (src.transpose() * w) / wsum;
  const Vec3 cd = (dst.transpose() * w) / wsum;

  Mat3 cov_src = Mat3::Zero();  // src scatter, for the degeneracy check
  Mat3 h = Mat3::Zero();        // cross-covariance
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] <= 0.0) continue;
    const Vec3 x = src.row(i).transpose() - cs;
    const Vec3 y = dst.row(i).transpose() - cd;
    cov_src += w[i] * x * x.transpose();
    h += w[i] * x * y.transpose();
  }
  cov_src /= wsum;
  h /= wsum;

  // Collinear or coincident source points leave the rotation underdetermined.
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov_src);
  const Vec3 ev = es.eigenvalues();  // ascending
  if (ev[1] <= 1e-12 * std::max(ev[2], 1e-300)) {
    throw std::invalid_argument("kabsch_fit: degenerate (collinear) input");
  }

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  RigidTransform out;
  out.R = svd.matrixV() * d * svd.matrixU().transpose();
  out.t = cd - out.R * cs;
  return out;
}

}  // namespace partmotion::geom
