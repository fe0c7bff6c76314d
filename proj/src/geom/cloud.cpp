#include "partmotion/geom/cloud.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace partmotion::geom {

PointCloud apply_point_transforms(const PointTransforms& transforms,
                                  const PointCloud& cloud) {
  if (transforms.size() != cloud.rows()) {
    throw std::invalid_argument("apply_point_transforms: size mismatch");
  }
  PointCloud out(cloud.rows(), 3);
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    const Mat34& m = transforms.rows[static_cast<std::size_t>(i)];
    out.row(i) =
        (m.leftCols<3>() * cloud.row(i).transpose() + m.col(3)).transpose();
  }
  return out;
}

NormalizedPair normalize_pair(const PointCloud& a, const PointCloud& b) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw std::invalid_argument("normalize_pair: empty cloud");
  }
  if (!all_finite(a) || !all_finite(b)) {
    throw std::invalid_argument("normalize_pair: non-finite input");
  }
  Box3 box = bounding_box(a);
  const Box3 bb = bounding_box(b);
  box.lo = box.lo.cwiseMin(bb.lo);
  box.hi = box.hi.cwiseMax(bb.hi);
  const double max_dim = box.size().maxCoeff();
  if (max_dim < 1e-12) {
    throw std::invalid_argument("normalize_pair: zero-extent cloud pair");
  }
  NormalizedPair out;
  out.map.scale = 1.0 / (1.1 * max_dim);
  out.map.offset = -out.map.scale * box.center();
  out.a = out.map.apply(a);
  out.b = out.map.apply(b);
  return out;
}

std::vector<int> farthest_point_sample(const PointCloud& cloud, int m) {
  const int n = static_cast<int>(cloud.rows());
  if (m < 1 || m > n) {
    throw std::invalid_argument("farthest_point_sample: m out of range");
  }
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(m));
  Eigen::VectorXd dist =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  int current = 0;
  picked.push_back(current);
  for (int step = 1; step < m; ++step) {
    double best = -1.0;
    int best_idx = -1;
    for (int i = 0; i < n; ++i) {
      const double d =
          (cloud.row(i) - cloud.row(current)).squaredNorm();
      if (d < dist[i]) dist[i] = d;
      if (dist[i] > best) {  // strict '>' keeps the lowest index on ties
        best = dist[i];
        best_idx = i;
      }
    }
    current = best_idx;
    picked.push_back(current);
  }
  return picked;
}

namespace {

bool lex_less(const PointCloud& cloud, int a, int b) {
  for (int c = 0; c < 3; ++c) {
    if (cloud(a, c) != cloud(b, c)) return cloud(a, c) < cloud(b, c);
  }
  return false;
}

}  // namespace

std::vector<int> canonical_farthest_point_sample(const PointCloud& cloud,
                                                 int m) {
  const int n = static_cast<int>(cloud.rows());
  if (m < 1 || m > n) {
    throw std::invalid_argument("canonical_farthest_point_sample: m range");
  }
  int current = 0;
  for (int i = 1; i < n; ++i) {
    if (lex_less(cloud, i, current)) current = i;
  }
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(m));
  picked.push_back(current);
  Eigen::VectorXd dist =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int step = 1; step < m; ++step) {
    int best_idx = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d = (cloud.row(i) - cloud.row(current)).squaredNorm();
      if (d < dist[i]) dist[i] = d;
      if (dist[i] > best ||
          (dist[i] == best && best_idx >= 0 && lex_less(cloud, i, best_idx))) {
        best = dist[i];
        best_idx = i;
      }
    }
    current = best_idx;
    picked.push_back(current);
  }
  return picked;
}

std::vector<int> ball_query_nearest(const PointCloud& cloud, const Vec3& center,
                                    double radius, int k) {
  const double r2 = radius * radius;
  std::vector<std::pair<double, int>> in_range;
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    const double d2 = (cloud.row(i).transpose() - center).squaredNorm();
    if (d2 <= r2) in_range.emplace_back(d2, static_cast<int>(i));
  }
  const auto cmp = [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first < y.first : x.second < y.second;
  };
  if (static_cast<int>(in_range.size()) > k) {
    std::partial_sort(in_range.begin(), in_range.begin() + k, in_range.end(),
                      cmp);
    in_range.resize(static_cast<std::size_t>(k));
  } else {
    std::sort(in_range.begin(), in_range.end(), cmp);
  }
  std::vector<int> out;
  out.reserve(in_range.size());
  for (const auto& [d2, idx] : in_range) out.push_back(idx);
  return out;
}

}  // namespace partmotion::geom
