#include "partmotion/eval/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "partmotion/transport/assignment.hpp"

namespace partmotion::eval {

std::vector<PartPose> default_sweep_grid(const PartPose& phi1,
                                         const PartPose& phi2, int joint,
                                         int n_interp, double extrap_frac) {
  const double lo = std::min(phi1[joint], phi2[joint]);
  const double hi = std::max(phi1[joint], phi2[joint]);
  const double span = hi - lo;
  std::vector<PartPose> grid;
  const auto at = [&](double v) {
    PartPose p = phi1;
    p[joint] = v;
    return p;
  };
  grid.push_back(at(lo - extrap_frac * span));
  for (int k = 1; k <= n_interp; ++k) {
    grid.push_back(at(lo + span * static_cast<double>(k) /
                              static_cast<double>(n_interp + 1)));
  }
  grid.push_back(at(hi + extrap_frac * span));
  return grid;
}

SweepCurve interp_extrap(const model::NetworkF& net,
                         const synthgen::ArticulatedObject& obj,
                         const PartPose& phi1, const PartPose& phi2,
                         const std::vector<PartPose>& phi_grid, int joint) {
  if (joint < 0 || joint >= obj.num_joints()) {
    throw std::invalid_argument("interp_extrap: joint index out of range");
  }
  SweepCurve curve;
  curve.joint = joint;
  curve.phi1 = phi1[joint];
  curve.phi2 = phi2[joint];
  const double lo = std::min(curve.phi1, curve.phi2);
  const double hi = std::max(curve.phi1, curve.phi2);

  for (const PartPose& phi3 : phi_grid) {
    const synthgen::TrainingTuple tup =
        synthgen::make_tuple_at(obj, phi1, phi2, phi3);
    const PointCloud pred = net.forward(tup);
    SweepPoint pt;
    pt.phi3 = phi3[joint];
    pt.emd = transport::emd_exact(pred, tup.i3).cost;
    pt.extrapolation = pt.phi3 < lo || pt.phi3 > hi;
    curve.points.push_back(pt);
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const SweepPoint& a, const SweepPoint& b) {
              return a.phi3 < b.phi3;
            });
  return curve;
}

}  // namespace partmotion::eval
