#pragma once

#include <vector>

#include "partmotion/model/network.hpp"
#include "partmotion/synthgen/object.hpp"

namespace partmotion::eval {

struct SweepPoint {
  double phi3 = 0.0;  // swept joint's value
  double emd = 0.0;
  bool extrapolation = false;
};

// EMD of generated clouds over a grid of target poses between (interpolation)
// and beyond (extrapolation) the two observed frames.
struct SweepCurve {
  int joint = 0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  std::vector<SweepPoint> points;  // sorted by phi3
};

// Interior poses evenly spaced strictly between the frames plus one
// extrapolation point on each side at `extrap_frac` of the span.
std::vector<PartPose> default_sweep_grid(const PartPose& phi1,
                                         const PartPose& phi2, int joint,
                                         int n_interp = 5,
                                         double extrap_frac = 0.25);

SweepCurve interp_extrap(const model::NetworkF& net,
                         const synthgen::ArticulatedObject& obj,
                         const PartPose& phi1, const PartPose& phi2,
                         const std::vector<PartPose>& phi_grid, int joint = 0);

}  // namespace partmotion::eval
