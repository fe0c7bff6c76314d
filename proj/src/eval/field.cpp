#include "partmotion/eval/field.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "partmotion/eval/evaluate.hpp"

namespace partmotion::eval {

FieldReport grid_field_report(const model::NetworkF& net,
                              const synthgen::ArticulatedObject& obj,
                              const synthgen::TrainingTuple& tuple) {
  const geom::NormalizedPair np = geom::normalize_pair(tuple.i1, tuple.i2);
  const auto enc = net.encode_geometry(np.a, np.b);
  const auto mu1 = net.encode_pose(tuple.phi1);
  const auto mu2 = net.encode_pose(tuple.phi2);
  const auto mu3 = net.encode_pose(tuple.phi3);
  const auto grid = net.build_transformation_grid(enc.g_geo, mu1, mu2);
  const model::GridField field = net.grid_point_transforms(grid, mu3);

  FieldReport report;
  report.grid_k = grid.K;
  report.positions = np.map.invert(field.positions);
  report.displacements = field.displacements / np.map.scale;

  const int dj = dominant_joint(obj);
  report.joint = dj;
  const auto& spec = obj.joints[static_cast<std::size_t>(dj)];
  const double dphi = tuple.phi3[dj] - tuple.phi1[dj];
  report.gt_axis = dphi >= 0.0 ? spec.axis : Vec3(-spec.axis);

  // Region of interest: the movable part's bounding box in frame 1, padded.
  const Mask& mask = obj.per_joint_masks[static_cast<std::size_t>(dj)];
  Box3 region;
  bool first = true;
  for (Eigen::Index i = 0; i < tuple.i1.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const Vec3 p = tuple.i1.row(i).transpose();
    if (first) {
      region.lo = region.hi = p;
      first = false;
    } else {
      region.expand(p);
    }
  }
  const Vec3 pad = 0.1 * region.size() + Vec3::Constant(1e-6);
  region.lo -= pad;
  region.hi += pad;

  // Weighted least-squares screw fit d = omega x p + v over region nodes.
  Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
  double weight_sum = 0.0;
  int in_region = 0;
  for (Eigen::Index i = 0; i < report.positions.rows(); ++i) {
    const Vec3 p = report.positions.row(i).transpose();
    if (!region.contains(p)) continue;
    ++in_region;
    const Vec3 d = report.displacements.row(i).transpose();
    const double w = d.norm();
    if (w < 1e-12) continue;
    weight_sum += w;
    Eigen::Matrix<double, 3, 6> a;
    // omega x p = -[p]_x omega
    a << 0.0, p.z(), -p.y(), 1.0, 0.0, 0.0,
        -p.z(), 0.0, p.x(), 0.0, 1.0, 0.0,
        p.y(), -p.x(), 0.0, 0.0, 0.0, 1.0;
    ata.noalias() += w * a.transpose() * a;
    atb.noalias() += w * a.transpose() * d;
  }
  report.nodes_in_region = in_region;
  if (weight_sum < 1e-9) {
    report.fittable = false;  // degenerate (all-zero) field
    return report;
  }
  const Eigen::Matrix<double, 6, 1> sol = ata.ldlt().solve(atb);
  const Vec3 omega = sol.head<3>();
  if (omega.norm() < 1e-12) {
    report.fittable = false;
    return report;
  }
  report.fittable = true;
  report.fitted_axis = omega.normalized();
  const double c =
      std::clamp(report.fitted_axis.dot(report.gt_axis), -1.0, 1.0);
  report.axis_error_deg = std::acos(c) * 180.0 / M_PI;
  return report;
}

void write_field_csv(const FieldReport& field, const std::filesystem::path& file) {
  std::ofstream out(file);
  out << "x,y,z,dx,dy,dz\n";
  char buf[160];
  for (Eigen::Index i = 0; i < field.positions.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  field.positions(i, 0), field.positions(i, 1),
                  field.positions(i, 2), field.displacements(i, 0),
                  field.displacements(i, 1), field.displacements(i, 2));
    out << buf;
  }
}

}  // namespace partmotion::eval
