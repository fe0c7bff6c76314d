#pragma once

#include <filesystem>

#include "partmotion/model/network.hpp"
#include "partmotion/synthgen/tuple.hpp"

namespace partmotion::eval {

// Decoded displacement field at every grid node (world frame), plus the
// screw-axis fit over the movable region and its angle to the ground truth.
struct FieldReport {
  int grid_k = 0;
  PointCloud positions;      // K^3 x 3, world frame
  PointCloud displacements;  // K^3 x 3, world frame
  bool fittable = false;
  Vec3 fitted_axis = Vec3::Zero();
  double axis_error_deg = 0.0;
  Vec3 gt_axis = Vec3::Zero();  // sign-corrected for the motion direction
  int joint = 0;
  int nodes_in_region = 0;
};

FieldReport grid_field_report(const model::NetworkF& net,
                              const synthgen::ArticulatedObject& obj,
                              const synthgen::TrainingTuple& tuple);

// CSV columns: x,y,z,dx,dy,dz.
void write_field_csv(const FieldReport& field,
                     const std::filesystem::path& file);

}  // namespace partmotion::eval
