#pragma once

#include "partmotion/synthgen/object.hpp"
#include "partmotion/util/rng.hpp"

namespace partmotion::synthgen {

// One training sample: two observed frames with their poses, the target pose,
// the ground-truth target frame, the movable mask, and the per-point rigid
// transforms carrying frame 1 to frame 3. Point i is the same material point
// in every cloud.
struct TrainingTuple {
  PointCloud i1, i2, i3;
  PartPose phi1, phi2, phi3;
  Mask movable_mask;
  geom::PointTransforms gt_transforms_1to3;
};

// Default minimum pose separation between the two observed frames; it keeps
// the motion direction unambiguous from two frames.
double default_delta_min(JointType kind);

// Uniform poses within joint limits; (phi1, phi2) resampled until every joint
// satisfies |phi1 - phi2| >= delta_min. Throws std::runtime_error after 1000
// failed attempts (range too narrow).
TrainingTuple sample_tuple(const ArticulatedObject& obj, Rng& rng,
                           double delta_min);

// Tuple at explicit poses (used by sweeps and tests).
TrainingTuple make_tuple_at(const ArticulatedObject& obj, const PartPose& phi1,
                            const PartPose& phi2, const PartPose& phi3);

}  // namespace partmotion::synthgen
