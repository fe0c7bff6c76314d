#include "partmotion/synthgen/tuple.hpp"

#include <cmath>
#include <stdexcept>

namespace partmotion::synthgen {

double default_delta_min(JointType kind) {
  return kind == JointType::revolute ? 0.15 : 0.05;
}

TrainingTuple make_tuple_at(const ArticulatedObject& obj, const PartPose& phi1,
                            const PartPose& phi2, const PartPose& phi3) {
  TrainingTuple t;
  t.phi1 = phi1;
  t.phi2 = phi2;
  t.phi3 = phi3;
  t.i1 = pose_cloud(obj, phi1);
  t.i2 = pose_cloud(obj, phi2);
  t.i3 = pose_cloud(obj, phi3);
  t.movable_mask = obj.movable_mask;
  t.gt_transforms_1to3 = gt_point_transforms(obj, phi1, phi3);
  return t;
}

TrainingTuple sample_tuple(const ArticulatedObject& obj, Rng& rng,
                           double delta_min) {
  const int j = obj.num_joints();
  const auto draw = [&] {
    PartPose p(j);
    for (int i = 0; i < j; ++i) {
      const auto& joint = obj.joints[static_cast<std::size_t>(i)];
      p[i] = rng.uniform(joint.pose_min, joint.pose_max);
    }
    return p;
  };

  PartPose phi1, phi2;
  bool ok = false;
  for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
    phi1 = draw();
    phi2 = draw();
    ok = true;
    for (int i = 0; i < j; ++i) {
      if (std::abs(phi1[i] - phi2[i]) < delta_min) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) {
    throw std::runtime_error(
        "sample_tuple: joint range too narrow for delta_min");
  }
  const PartPose phi3 = draw();
  return make_tuple_at(obj, phi1, phi2, phi3);
}

}  // namespace partmotion::synthgen
