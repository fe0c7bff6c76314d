#pragma once

#include "partmotion/common.hpp"
#include "partmotion/geom/rigid.hpp"

namespace partmotion::transport {

// Symmetric mean nearest-neighbor distance:
// mean_a min_b ‖a-b‖ + mean_b min_a ‖a-b‖.
double chamfer(const PointCloud& a, const PointCloud& b);

enum class JointKind { revolute, prismatic };

// Pose angle error via rigid registration of the movable part.
// Revolute: angle in degrees between the Kabsch-fitted rotation (masked I1 ->
// masked pred) and the ground-truth one. Prismatic: ‖t_fit - t_gt‖ with the
// rotation constrained to identity. Requires >= 3 non-degenerate movable
// points; prediction rows must align with I1's.
double pae(const PointCloud& pred, const PointCloud& i1, const Mask& movable,
           const geom::RigidTransform& gt, JointKind kind);

}  // namespace partmotion::transport
