#pragma once

#include <cmath>
#include <stdexcept>

#include "partmotion/common.hpp"

namespace partmotion::geom {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// K×K×K lattice of C-channel features over an axis-aligned extent. Features
// sit on the nodes; node (i,j,k) occupies data row (i*K + j)*K + k.
template <typename T>
struct Grid3D {
  int K = 0;
  int C = 0;
  Box3 extent;
  MatX<T> data;  // K^3 x C

  static Grid3D zeros(int K, int C, const Box3& extent) {
    Grid3D g;
    g.K = K;
    g.C = C;
    g.extent = extent;
    g.data = MatX<T>::Zero(static_cast<Eigen::Index>(K) * K * K, C);
    return g;
  }

  int node_index(int i, int j, int k) const { return (i * K + j) * K + k; }

  Vec3 node_position(int i, int j, int k) const {
    const Vec3 step = extent.size() / static_cast<double>(K - 1);
    return extent.lo + Vec3(i * step.x(), j * step.y(), k * step.z());
  }
};

// One trilinear stencil: 8 node rows and their convex weights.
struct TrilinearStencil {
  int rows[8];
  double w[8];
};

// Stencil for a query point; out-of-extent queries clamp to the boundary cell.
inline TrilinearStencil trilinear_stencil(int K, const Box3& extent,
                                          const Vec3& p) {
  if (K < 2) throw std::invalid_argument("trilinear_stencil: K < 2");
  const Vec3 size = extent.size();
  if ((size.array() <= 0.0).any()) {
    throw std::invalid_argument("trilinear_stencil: extent has no volume");
  }
  int base[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    double u = (p[a] - extent.lo[a]) / size[a] * (K - 1);
    u = std::clamp(u, 0.0, static_cast<double>(K - 1));
    int i0 = std::min(static_cast<int>(std::floor(u)), K - 2);
    base[a] = i0;
    f[a] = u - i0;
  }
  TrilinearStencil st;
  int idx = 0;
  for (int di = 0; di < 2; ++di) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int dk = 0; dk < 2; ++dk) {
        const int i = base[0] + di, j = base[1] + dj, k = base[2] + dk;
        st.rows[idx] = (i * K + j) * K + k;
        st.w[idx] = (di ? f[0] : 1.0 - f[0]) * (dj ? f[1] : 1.0 - f[1]) *
                    (dk ? f[2] : 1.0 - f[2]);
        ++idx;
      }
    }
  }
  return st;
}

// Per-point features by trilinear interpolation: N x C.
template <typename T>
MatX<T> trilinear_query(const Grid3D<T>& grid, const PointCloud& points) {
  MatX<T> out = MatX<T>::Zero(points.rows(), grid.C);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto st =
        trilinear_stencil(grid.K, grid.extent, points.row(i).transpose());
    for (int s = 0; s < 8; ++s) {
      out.row(i) += static_cast<T>(st.w[s]) * grid.data.row(st.rows[s]);
    }
  }
  return out;
}

// Adjoint of the query with per-node weight normalization: node features are
// the weighted mean of the features splatted onto them. Nodes that receive
// no mass stay zero.
template <typename T>
struct SplatResult {
  Grid3D<T> grid;
  Eigen::VectorXd node_weight;  // pre-normalization weight sums
};

template <typename T>
SplatResult<T> trilinear_splat(const PointCloud& points, const MatX<T>& features,
                               int K, const Box3& extent) {
  if (points.rows() != features.rows()) {
    throw std::invalid_argument("trilinear_splat: size mismatch");
  }
  SplatResult<T> out;
  out.grid = Grid3D<T>::zeros(K, static_cast<int>(features.cols()), extent);
  out.node_weight = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K) * K * K);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto st = trilinear_stencil(K, extent, points.row(i).transpose());
    for (int s = 0; s < 8; ++s) {
      out.grid.data.row(st.rows[s]) +=
          static_cast<T>(st.w[s]) * features.row(i);
      out.node_weight[st.rows[s]] += st.w[s];
    }
  }
  for (Eigen::Index r = 0; r < out.grid.data.rows(); ++r) {
    if (out.node_weight[r] > 1e-12) {
      out.grid.data.row(r) /= static_cast<T>(out.node_weight[r]);
    }
  }
  return out;
}

}  // namespace partmotion::geom
