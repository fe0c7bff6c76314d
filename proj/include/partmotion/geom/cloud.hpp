#pragma once

#include <vector>

#include "partmotion/common.hpp"
#include "partmotion/geom/rigid.hpp"

namespace partmotion::geom {

// One 3x4 rigid map per point: rotation block plus translation column.
struct PointTransforms {
  std::vector<Mat34> rows;

  Eigen::Index size() const { return static_cast<Eigen::Index>(rows.size()); }

  static PointTransforms identity(Eigen::Index n) {
    PointTransforms t;
    t.rows.assign(static_cast<std::size_t>(n), RigidTransform{}.as_matrix());
    return t;
  }
};

// out_i = R_i * x_i + t_i. Throws std::invalid_argument on size mismatch.
PointCloud apply_point_transforms(const PointTransforms& transforms,
                                  const PointCloud& cloud);

// Invertible isotropic map into normalized coordinates: x' = scale * x + offset.
struct NormalizationMap {
  double scale = 1.0;
  Vec3 offset = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * p + offset; }
  Vec3 invert(const Vec3& p) const { return (p - offset) / scale; }

  PointCloud apply(const PointCloud& c) const {
    return (c * scale).rowwise() + offset.transpose();
  }
  PointCloud invert(const PointCloud& c) const {
    return (c.rowwise() - offset.transpose()) / scale;
  }
};

struct NormalizedPair {
  PointCloud a;
  PointCloud b;
  NormalizationMap map;
};

// Maps the joint bounding box of both clouds into [-0.5, 0.5]^3 with a 10%
// margin and isotropic scale. Throws std::invalid_argument for zero-extent
// or non-finite input.
NormalizedPair normalize_pair(const PointCloud& a, const PointCloud& b);

// Greedy max-min coverage subsample starting from index 0; deterministic for
// a fixed input ordering. Throws std::invalid_argument if m > N or m < 1.
std::vector<int> farthest_point_sample(const PointCloud& cloud, int m);

// Same greedy coverage, but the start point and all ties are resolved by
// lexicographic position rather than index, so the selected sequence depends
// only on the point set (the encoder's permutation invariance rests on this).
std::vector<int> canonical_farthest_point_sample(const PointCloud& cloud,
                                                 int m);

// Indices of up to k nearest points within radius of `center`; always
// nonempty when `self` (an index into cloud) lies within radius of itself.
// Ties are broken by lower index.
std::vector<int> ball_query_nearest(const PointCloud& cloud, const Vec3& center,
                                    double radius, int k);

}  // namespace partmotion::geom
