#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "partmotion/geom/cloud.hpp"
#include "partmotion/geom/grid.hpp"
#include "partmotion/model/config.hpp"
#include "partmotion/model/layers.hpp"
#include "partmotion/synthgen/tuple.hpp"

namespace partmotion::model {

using synthgen::TrainingTuple;
using GradCloud = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// ---- forward caches (kept for the hand-written backward pass) ----

template <typename T>
struct SAContext {
  std::vector<int> centroids;
  std::vector<int> neigh_offsets;  // n_out + 1 offsets into neigh_index
  std::vector<int> neigh_index;    // flat indices into the level's input
  MatX<T> mlp_in;                  // total_neigh x (3 + c_in)
  MlpCache<T> mlp_cache;
  MatX<T> mlp_out;                 // total_neigh x w_out
  std::vector<int> argmax_row;     // n_out * w_out
  PointCloud out_pos;              // n_out x 3
  MatX<T> out_feat;                // n_out x w_out
};

template <typename T>
struct UNetContext {
  MatX<T> in0, e0, p1, e1, p2, e2, u1_in, d1, u0_in, d0, g_raw;
};

template <typename T>
struct FPContext {
  std::vector<int> idx;    // N*3 source rows in the fused features
  std::vector<double> w;   // N*3 inverse-distance weights (normalized)
  MatX<T> interp;          // N x 2d
  MatX<T> mlp_in;          // N x (2d + 3)
  MlpCache<T> mlp_cache;
};

// Sub-sampled two-frame features, their attention fusion, the dense
// per-point features aligned with I1, and the geometric feature grid.
template <typename T>
struct EncoderOutput {
  MatX<T> h1, h2;       // N' x d
  MatX<T> attention;    // N' x N' row-stochastic
  MatX<T> fused;        // N' x 2d
  MatX<T> per_point;    // N x per_point_dim
  geom::Grid3D<T> g_geo;
};

template <typename T>
struct EncodeContext {
  SAContext<T> sa1_a, sa2_a, sa1_b, sa2_b;
  MlpCache<T> grid_in_cache;
  MatX<T> grid_in_feat;  // N' x splat_channels
  geom::SplatResult<T> splat;
  UNetContext<T> unet;
  FPContext<T> fp;
  EncoderOutput<T> out;
};

template <typename T>
struct PoseContext {
  MlpCache<T> cache;
  MatX<T> mu;  // 1 x d_mu
};

template <typename T>
struct DecodeContext {
  MatX<T> psi;     // N x d_psi (nir) — unused in no_nir
  MatX<T> dec_in;  // N x decoder_input_width
  MlpCache<T> cache;
  MatX<T> raw;     // N x 9|12
};

template <typename T>
struct ForwardContext {
  geom::NormalizationMap nmap;
  PointCloud i1n, i2n;
  EncodeContext<T> enc;
  PoseContext<T> pose1, pose2, pose3;
  geom::Grid3D<T> grid;  // G = [G_geo, z_art] (nir only)
  DecodeContext<T> dec;
  PointCloud pred_n;  // prediction in the normalized frame
  PointCloud pred;    // world frame
};

// Displacement field decoded at every grid node (normalized frame).
struct GridField {
  PointCloud positions;
  PointCloud displacements;
};

// The learnable pipeline: two-frame geometry encoder with attention fusion,
// volumetric encoder-decoder producing the geometric grid, pose encoder,
// transformation-grid assembly, and the per-point transform decoder.
// All methods are pure functions of (inputs, params); parameter mutation
// happens only through params() between calls.
template <typename T>
class Network {
 public:
  explicit Network(const ModelConfig& cfg);

  // Deterministic per seed. The transform decoder's final layer starts at
  // zero, so the decoded transform is exactly the identity.
  static Network init(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  // Inputs must be normalized (inside the unit cube); throws otherwise.
  EncoderOutput<T> encode_geometry(const PointCloud& i1n,
                                   const PointCloud& i2n) const;
  EncoderOutput<T> encode_geometry(const PointCloud& i1n, const PointCloud& i2n,
                                   EncodeContext<T>& ctx) const;

  MatX<T> encode_pose(const PartPose& phi) const;
  MatX<T> encode_pose(const PartPose& phi, PoseContext<T>& ctx) const;

  // G = [G_geo, z_art] with z_art = [mu1, mu2] appended to every node.
  geom::Grid3D<T> build_transformation_grid(const geom::Grid3D<T>& g_geo,
                                            const MatX<T>& mu1,
                                            const MatX<T>& mu2) const;

  // Per-point transforms for all N points of i1n (base points included).
  geom::PointTransforms decode_transforms(const geom::Grid3D<T>& grid,
                                          const PointCloud& i1n,
                                          const MatX<T>& mu3) const;

  // Full chain: normalize -> encode -> grid -> decode -> apply -> denormalize.
  // Honors cfg.variant (the no-NIR variant consumes dense per-point features
  // and bypasses the grid and trilinear query).
  PointCloud forward(const TrainingTuple& tuple) const;
  PointCloud forward(const TrainingTuple& tuple, ForwardContext<T>& ctx) const;

  // Convenience guard for the ablation path.
  PointCloud forward_no_nir(const TrainingTuple& tuple) const;

  // Accumulates parameter gradients for dL/d(pred) into params().grad.
  void backward(const ForwardContext<T>& ctx, const GradCloud& dpred);

  // Transforms decoded at every grid node position.
  GridField grid_point_transforms(const geom::Grid3D<T>& grid,
                                  const MatX<T>& mu3) const;

  static Box3 grid_extent() {
    return {Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)};
  }

 private:
  struct SALevel {
    Mlp<T> mlp;
    int n_out = 0;
    double radius = 0.0;
    int k_max = 0;
  };

  void sa_forward(const SALevel& level, const PointCloud& pos,
                  const MatX<T>& feat, SAContext<T>& ctx) const;
  MatX<T> sa_backward(const SALevel& level, const SAContext<T>& ctx,
                      const MatX<T>& dout, int n_in, int c_in);

  void unet_forward(const MatX<T>& in0, UNetContext<T>& ctx) const;
  MatX<T> unet_backward(const UNetContext<T>& ctx, const MatX<T>& dg);

  void fp_forward(const PointCloud& points, const PointCloud& sub_pos,
                  const MatX<T>& fused, FPContext<T>& ctx,
                  MatX<T>& per_point) const;
  MatX<T> fp_backward(const FPContext<T>& ctx, const MatX<T>& dper_point,
                      int n_sub);

  void decode_raw(const geom::Grid3D<T>* grid, const MatX<T>* per_point,
                  const PointCloud& queries, const MatX<T>& mu1,
                  const MatX<T>& mu2, const MatX<T>& mu3,
                  DecodeContext<T>& ctx) const;
  void transforms_from_raw(const MatX<T>& raw,
                           geom::PointTransforms& out) const;

  ModelConfig cfg_;
  ParamStore<T> params_;
  SALevel sa1_, sa2_;
  Mlp<T> grid_in_, fp_mlp_, pose_mlp_, decoder_;
  Conv3<T> enc0_, enc1_, enc2_, dec1_, dec0_, head_;
};

extern template class Network<float>;
extern template class Network<double>;

using NetworkF = Network<float>;
using NetworkD = Network<double>;

}  // namespace partmotion::model
