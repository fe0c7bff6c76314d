#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "partmotion/common.hpp"
#include "partmotion/geom/cloud.hpp"
#include "partmotion/geom/rigid.hpp"

namespace partmotion::synthgen {

enum class Category {
  door,
  laptop,
  oven,
  refrigerator,
  microwave,
  table,
  storage,
};

std::string to_string(Category c);
Category category_from_string(const std::string& name);

enum class JointType { revolute, prismatic };

struct JointSpec {
  JointType kind = JointType::revolute;
  Vec3 axis = Vec3::UnitZ();   // unit vector
  Vec3 pivot = Vec3::Zero();   // meaningful for revolute only
  double pose_min = 0.0;       // radians (revolute) or length units (prismatic)
  double pose_max = 1.0;

  void validate() const;
};

struct ArticulatedObject {
  Category category = Category::door;
  std::uint64_t seed = 0;
  PointCloud rest_cloud;                 // pose = 0
  Mask movable_mask;                     // union of per_joint_masks
  std::vector<JointSpec> joints;         // J >= 1
  std::vector<Mask> per_joint_masks;     // pairwise disjoint

  int num_points() const { return static_cast<int>(rest_cloud.rows()); }
  int num_joints() const { return static_cast<int>(joints.size()); }
  PartPose zero_pose() const { return PartPose::Zero(num_joints()); }
  PartPose clamp_pose(const PartPose& p) const;
};

// Procedural object from (category, seed, n_points); regeneration is
// bit-identical. Base and movable panels are axis-aligned boxes with
// category-specific joint placement; doors draw one of 4 hinge orientations
// from the seed, refrigerators/microwaves one of 2; table/storage use
// prismatic joints. Points are sampled area-weighted uniform on box surfaces.
// Throws std::invalid_argument for n_points < 64.
ArticulatedObject make_object(Category category, std::uint64_t seed,
                              int n_points);

// The object's cloud at the given pose: base points unchanged, movable points
// carried by their joint's rigid motion. Throws on pose-length mismatch.
PointCloud pose_cloud(const ArticulatedObject& obj, const PartPose& pose);

// The rigid map carrying joint j's part from pose value `from` to `to`.
geom::RigidTransform joint_rigid_transform(const JointSpec& joint, double from,
                                           double to);

// Per-point transforms from the cloud at phi_from to the cloud at phi_to:
// identity rows for base points, the joint motion for movable ones.
geom::PointTransforms gt_point_transforms(const ArticulatedObject& obj,
                                          const PartPose& phi_from,
                                          const PartPose& phi_to);

std::vector<Category> all_categories();

}  // namespace partmotion::synthgen
