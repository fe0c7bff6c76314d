#include "partmotion/model/network.hpp"

#include <cmath>
#include <stdexcept>

#include "partmotion/util/digest.hpp"

namespace partmotion::model {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Normalized clouds live in [-0.5, 0.5]^3; allow float slack.
void check_normalized(const PointCloud& c, const char* what) {
  if (c.rows() == 0 || !all_finite(c) ||
      c.cwiseAbs().maxCoeff() > 0.5 + 1e-6) {
    throw std::invalid_argument(std::string(what) +
                                ": expects a normalized cloud inside the unit cube");
  }
}

template <typename T>
MatX<T> hcat(const MatX<T>& a, const MatX<T>& b) {
  MatX<T> out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

template <typename T>
MatX<T> broadcast_rows(const MatX<T>& row, Eigen::Index n) {
  MatX<T> out(n, row.cols());
  out.rowwise() = row.row(0);
  return out;
}

}  // namespace

template <typename T>
Network<T>::Network(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.d();

  sa1_.mlp = Mlp<T>{"encoder.sa1",
                    {3, cfg_.sa1_widths[0], cfg_.sa1_widths[1]},
                    /*relu_last=*/true};
  sa1_.n_out = cfg_.sa1_points;
  sa1_.radius = cfg_.sa1_radius;
  sa1_.k_max = cfg_.max_neighbors;

  sa2_.mlp = Mlp<T>{"encoder.sa2",
                    {3 + cfg_.sa1_widths[1], cfg_.sa2_widths[0], d},
                    /*relu_last=*/true};
  sa2_.n_out = cfg_.n_sub;
  sa2_.radius = cfg_.sa2_radius;
  sa2_.k_max = cfg_.max_neighbors;

  grid_in_ = Mlp<T>{"grid_in", {2 * d, cfg_.splat_channels}, false};
  fp_mlp_ = Mlp<T>{"per_point",
                   {2 * d + 3, cfg_.fp_hidden, cfg_.per_point_dim},
                   false};
  pose_mlp_ = Mlp<T>{"pose",
                     {cfg_.num_joints, cfg_.pose_widths[0], cfg_.pose_widths[1],
                      cfg_.pose_widths[2]},
                     /*relu_last=*/true};
  decoder_ = Mlp<T>{"decoder",
                    {cfg_.decoder_input_width(), cfg_.decoder_hidden[0],
                     cfg_.decoder_hidden[1], cfg_.decoder_output_width()},
                    false};

  const auto& u = cfg_.unet_widths;
  enc0_ = Conv3<T>{"unet.enc0", cfg_.splat_channels, u[0], 3};
  enc1_ = Conv3<T>{"unet.enc1", u[0], u[1], 3};
  enc2_ = Conv3<T>{"unet.enc2", u[1], u[2], 3};
  dec1_ = Conv3<T>{"unet.dec1", u[2] + u[1], u[1], 3};
  dec0_ = Conv3<T>{"unet.dec0", u[1] + u[0], u[0], 1};
  head_ = Conv3<T>{"unet.head", u[0], cfg_.c_geo, 1};

  sa1_.mlp.add_params(params_);
  sa2_.mlp.add_params(params_);
  grid_in_.add_params(params_);
  enc0_.add_params(params_);
  enc1_.add_params(params_);
  enc2_.add_params(params_);
  dec1_.add_params(params_);
  dec0_.add_params(params_);
  head_.add_params(params_);
  fp_mlp_.add_params(params_);
  pose_mlp_.add_params(params_);
  decoder_.add_params(params_);
}

template <typename T>
Network<T> Network<T>::init(const ModelConfig& cfg, std::uint64_t seed) {
  Network<T> net(cfg);
  Rng rng(mix_seed(seed, fnv1a64("partmotion-init")));
  net.sa1_.mlp.init_he(net.params_, rng);
  net.sa2_.mlp.init_he(net.params_, rng);
  net.grid_in_.init_he(net.params_, rng);
  net.enc0_.init_he(net.params_, rng);
  net.enc1_.init_he(net.params_, rng);
  net.enc2_.init_he(net.params_, rng);
  net.dec1_.init_he(net.params_, rng);
  net.dec0_.init_he(net.params_, rng);
  net.head_.init_he(net.params_, rng);
  net.fp_mlp_.init_he(net.params_, rng);
  net.pose_mlp_.init_he(net.params_, rng);
  net.decoder_.init_he(net.params_, rng, /*zero_last=*/true);
  return net;
}

// ---- set abstraction ----

template <typename T>
void Network<T>::sa_forward(const SALevel& level, const PointCloud& pos,
                            const MatX<T>& feat, SAContext<T>& ctx) const {
  const int c_in = static_cast<int>(feat.cols());
  ctx.centroids = geom::canonical_farthest_point_sample(pos, level.n_out);
  ctx.neigh_offsets.assign(1, 0);
  ctx.neigh_index.clear();
  for (int i = 0; i < level.n_out; ++i) {
    const Vec3 center =
        pos.row(ctx.centroids[static_cast<std::size_t>(i)]).transpose();
    std::vector<int> nb =
        geom::ball_query_nearest(pos, center, level.radius, level.k_max);
    ctx.neigh_index.insert(ctx.neigh_index.end(), nb.begin(), nb.end());
    ctx.neigh_offsets.push_back(static_cast<int>(ctx.neigh_index.size()));
  }
  const int total = static_cast<int>(ctx.neigh_index.size());
  ctx.mlp_in.resize(total, 3 + c_in);
  ctx.out_pos.resize(level.n_out, 3);
  for (int i = 0; i < level.n_out; ++i) {
    const Vec3 center =
        pos.row(ctx.centroids[static_cast<std::size_t>(i)]).transpose();
    ctx.out_pos.row(i) = center.transpose();
    for (int s = ctx.neigh_offsets[static_cast<std::size_t>(i)];
         s < ctx.neigh_offsets[static_cast<std::size_t>(i) + 1]; ++s) {
      const int j = ctx.neigh_index[static_cast<std::size_t>(s)];
      const Vec3 rel = pos.row(j).transpose() - center;
      for (int a = 0; a < 3; ++a) ctx.mlp_in(s, a) = static_cast<T>(rel[a]);
      if (c_in > 0) ctx.mlp_in.row(s).tail(c_in) = feat.row(j);
    }
  }
  ctx.mlp_out = level.mlp.forward(params_, ctx.mlp_in, &ctx.mlp_cache);
  const int w = static_cast<int>(ctx.mlp_out.cols());
  ctx.out_feat.resize(level.n_out, w);
  ctx.argmax_row.assign(static_cast<std::size_t>(level.n_out) * w, -1);
  for (int i = 0; i < level.n_out; ++i) {
    const int lo = ctx.neigh_offsets[static_cast<std::size_t>(i)];
    const int hi = ctx.neigh_offsets[static_cast<std::size_t>(i) + 1];
    for (int c = 0; c < w; ++c) {
      T best = ctx.mlp_out(lo, c);
      int best_row = lo;
      for (int s = lo + 1; s < hi; ++s) {
        if (ctx.mlp_out(s, c) > best) {
          best = ctx.mlp_out(s, c);
          best_row = s;
        }
      }
      ctx.out_feat(i, c) = best;
      ctx.argmax_row[static_cast<std::size_t>(i) * w + c] = best_row;
    }
  }
}

template <typename T>
MatX<T> Network<T>::sa_backward(const SALevel& level, const SAContext<T>& ctx,
                                const MatX<T>& dout, int n_in, int c_in) {
  const int w = static_cast<int>(ctx.mlp_out.cols());
  MatX<T> dmlp_out = MatX<T>::Zero(ctx.mlp_out.rows(), w);
  for (int i = 0; i < level.n_out; ++i) {
    for (int c = 0; c < w; ++c) {
      dmlp_out(ctx.argmax_row[static_cast<std::size_t>(i) * w + c], c) +=
          dout(i, c);
    }
  }
  const MatX<T> dmlp_in = level.mlp.backward(params_, ctx.mlp_cache, dmlp_out);
  MatX<T> dfeat = MatX<T>::Zero(n_in, c_in);
  if (c_in > 0) {
    for (std::size_t s = 0; s < ctx.neigh_index.size(); ++s) {
      dfeat.row(ctx.neigh_index[s]) +=
          dmlp_in.row(static_cast<Eigen::Index>(s)).tail(c_in);
    }
  }
  return dfeat;
}

// ---- volumetric encoder-decoder ----

template <typename T>
void Network<T>::unet_forward(const MatX<T>& in0, UNetContext<T>& ctx) const {
  const int k = cfg_.grid_k;
  ctx.in0 = in0;
  ctx.e0 = relu(enc0_.forward(params_, ctx.in0, k));
  ctx.p1 = avg_pool2(ctx.e0, k);
  ctx.e1 = relu(enc1_.forward(params_, ctx.p1, k / 2));
  ctx.p2 = avg_pool2(ctx.e1, k / 2);
  ctx.e2 = relu(enc2_.forward(params_, ctx.p2, k / 4));
  ctx.u1_in = hcat(upsample2(ctx.e2, k / 4), ctx.e1);
  ctx.d1 = relu(dec1_.forward(params_, ctx.u1_in, k / 2));
  ctx.u0_in = hcat(upsample2(ctx.d1, k / 2), ctx.e0);
  ctx.d0 = relu(dec0_.forward(params_, ctx.u0_in, k));
  ctx.g_raw = head_.forward(params_, ctx.d0, k);
}

template <typename T>
MatX<T> Network<T>::unet_backward(const UNetContext<T>& ctx, const MatX<T>& dg) {
  const int k = cfg_.grid_k;
  const auto& u = cfg_.unet_widths;
  MatX<T> d_d0 = head_.backward(params_, ctx.d0, dg, k);
  d_d0 = relu_backward(ctx.d0, d_d0);
  const MatX<T> d_u0in = dec0_.backward(params_, ctx.u0_in, d_d0, k);
  MatX<T> d_e0 = d_u0in.rightCols(u[0]);
  MatX<T> d_d1 = upsample2_backward(MatX<T>(d_u0in.leftCols(u[1])), k / 2);
  d_d1 = relu_backward(ctx.d1, d_d1);
  const MatX<T> d_u1in = dec1_.backward(params_, ctx.u1_in, d_d1, k / 2);
  MatX<T> d_e1 = d_u1in.rightCols(u[1]);
  MatX<T> d_e2 = upsample2_backward(MatX<T>(d_u1in.leftCols(u[2])), k / 4);
  d_e2 = relu_backward(ctx.e2, d_e2);
  const MatX<T> d_p2 = enc2_.backward(params_, ctx.p2, d_e2, k / 4);
  d_e1 += avg_pool2_backward(d_p2, k / 2);
  d_e1 = relu_backward(ctx.e1, d_e1);
  const MatX<T> d_p1 = enc1_.backward(params_, ctx.p1, d_e1, k / 2);
  d_e0 += avg_pool2_backward(d_p1, k);
  d_e0 = relu_backward(ctx.e0, d_e0);
  return enc0_.backward(params_, ctx.in0, d_e0, k);
}

// ---- feature propagation to dense per-point features ----

template <typename T>
void Network<T>::fp_forward(const PointCloud& points, const PointCloud& sub_pos,
                            const MatX<T>& fused, FPContext<T>& ctx,
                            MatX<T>& per_point) const {
  const Eigen::Index n = points.rows();
  const Eigen::Index m = sub_pos.rows();
  const int kn = 3;
  ctx.idx.assign(static_cast<std::size_t>(n) * kn, 0);
  ctx.w.assign(static_cast<std::size_t>(n) * kn, 0.0);
  ctx.interp = MatX<T>::Zero(n, fused.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    // three nearest sub-sampled points, inverse-square-distance weights
    int best[3] = {-1, -1, -1};
    double bd[3] = {1e300, 1e300, 1e300};
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d2 = (sub_pos.row(j) - points.row(i)).squaredNorm();
      if (d2 < bd[0]) {
        bd[2] = bd[1]; best[2] = best[1];
        bd[1] = bd[0]; best[1] = best[0];
        bd[0] = d2; best[0] = static_cast<int>(j);
      } else if (d2 < bd[1]) {
        bd[2] = bd[1]; best[2] = best[1];
        bd[1] = d2; best[1] = static_cast<int>(j);
      } else if (d2 < bd[2]) {
        bd[2] = d2; best[2] = static_cast<int>(j);
      }
    }
    double wsum = 0.0;
    double wk[3];
    for (int s = 0; s < kn; ++s) {
      wk[s] = 1.0 / (bd[s] + 1e-8);
      wsum += wk[s];
    }
    for (int s = 0; s < kn; ++s) {
      const double wn = wk[s] / wsum;
      ctx.idx[static_cast<std::size_t>(i) * kn + s] = best[s];
      ctx.w[static_cast<std::size_t>(i) * kn + s] = wn;
      ctx.interp.row(i) += static_cast<T>(wn) * fused.row(best[s]);
    }
  }
  MatX<T> pos_t(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) pos_t(i, a) = static_cast<T>(points(i, a));
  }
  ctx.mlp_in = hcat(ctx.interp, pos_t);
  per_point = fp_mlp_.forward(params_, ctx.mlp_in, &ctx.mlp_cache);
}

template <typename T>
MatX<T> Network<T>::fp_backward(const FPContext<T>& ctx,
                                const MatX<T>& dper_point, int n_sub) {
  const MatX<T> dmlp_in = fp_mlp_.backward(params_, ctx.mlp_cache, dper_point);
  const int c = static_cast<int>(ctx.interp.cols());
  MatX<T> dfused = MatX<T>::Zero(n_sub, c);
  const Eigen::Index n = ctx.interp.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int s = 0; s < 3; ++s) {
      dfused.row(ctx.idx[static_cast<std::size_t>(i) * 3 + s]) +=
          static_cast<T>(ctx.w[static_cast<std::size_t>(i) * 3 + s]) *
          dmlp_in.row(i).head(c);
    }
  }
  return dfused;
}

// ---- encoder ----

template <typename T>
EncoderOutput<T> Network<T>::encode_geometry(const PointCloud& i1n,
                                             const PointCloud& i2n) const {
  EncodeContext<T> ctx;
  return encode_geometry(i1n, i2n, ctx);
}

template <typename T>
EncoderOutput<T> Network<T>::encode_geometry(const PointCloud& i1n,
                                             const PointCloud& i2n,
                                             EncodeContext<T>& ctx) const {
  check_normalized(i1n, "encode_geometry(I1)");
  check_normalized(i2n, "encode_geometry(I2)");
  const MatX<T> no_feat_a(i1n.rows(), 0);
  const MatX<T> no_feat_b(i2n.rows(), 0);
  sa_forward(sa1_, i1n, no_feat_a, ctx.sa1_a);
  sa_forward(sa2_, ctx.sa1_a.out_pos, ctx.sa1_a.out_feat, ctx.sa2_a);
  sa_forward(sa1_, i2n, no_feat_b, ctx.sa1_b);
  sa_forward(sa2_, ctx.sa1_b.out_pos, ctx.sa1_b.out_feat, ctx.sa2_b);

  EncoderOutput<T>& out = ctx.out;
  out.h1 = ctx.sa2_a.out_feat;
  out.h2 = ctx.sa2_b.out_feat;

  // h = [h1, softmax(h1 h2^T / sqrt(d)) h2]
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(cfg_.d())));
  MatX<T> s = (out.h1 * out.h2.transpose()) * scale;
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const T mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp().matrix();
    s.row(r) /= s.row(r).sum();
  }
  out.attention = std::move(s);
  out.fused = hcat(out.h1, MatX<T>(out.attention * out.h2));

  ctx.grid_in_feat =
      grid_in_.forward(params_, out.fused, &ctx.grid_in_cache);
  ctx.splat = geom::trilinear_splat(ctx.sa2_a.out_pos, ctx.grid_in_feat,
                                    cfg_.grid_k, grid_extent());
  unet_forward(ctx.splat.grid.data, ctx.unet);
  out.g_geo.K = cfg_.grid_k;
  out.g_geo.C = cfg_.c_geo;
  out.g_geo.extent = grid_extent();
  out.g_geo.data = ctx.unet.g_raw;

  fp_forward(i1n, ctx.sa2_a.out_pos, out.fused, ctx.fp, out.per_point);
  return out;
}

template <typename T>
MatX<T> Network<T>::encode_pose(const PartPose& phi) const {
  PoseContext<T> ctx;
  return encode_pose(phi, ctx);
}

template <typename T>
MatX<T> Network<T>::encode_pose(const PartPose& phi, PoseContext<T>& ctx) const {
  require(phi.size() == cfg_.num_joints, "encode_pose: pose length mismatch");
  MatX<T> in(1, cfg_.num_joints);
  for (int j = 0; j < cfg_.num_joints; ++j) in(0, j) = static_cast<T>(phi[j]);
  ctx.mu = pose_mlp_.forward(params_, in, &ctx.cache);
  return ctx.mu;
}

template <typename T>
geom::Grid3D<T> Network<T>::build_transformation_grid(
    const geom::Grid3D<T>& g_geo, const MatX<T>& mu1, const MatX<T>& mu2) const {
  require(g_geo.C == cfg_.c_geo, "build_transformation_grid: channel mismatch");
  require(mu1.cols() == cfg_.d_mu() && mu2.cols() == cfg_.d_mu(),
          "build_transformation_grid: pose feature width mismatch");
  geom::Grid3D<T> g;
  g.K = g_geo.K;
  g.C = cfg_.d_psi();
  g.extent = g_geo.extent;
  g.data.resize(g_geo.data.rows(), g.C);
  g.data.leftCols(cfg_.c_geo) = g_geo.data;
  g.data.middleCols(cfg_.c_geo, cfg_.d_mu()).rowwise() = mu1.row(0);
  g.data.rightCols(cfg_.d_mu()).rowwise() = mu2.row(0);
  return g;
}

// ---- decoder ----

template <typename T>
void Network<T>::decode_raw(const geom::Grid3D<T>* grid,
                            const MatX<T>* per_point, const PointCloud& queries,
                            const MatX<T>& mu1, const MatX<T>& mu2,
                            const MatX<T>& mu3, DecodeContext<T>& ctx) const {
  const Eigen::Index n = queries.rows();
  if (cfg_.variant == ModelVariant::nir) {
    require(grid != nullptr, "decode_raw: missing grid");
    require(grid->C == cfg_.d_psi(), "decode_raw: grid channel mismatch");
    ctx.psi = geom::trilinear_query(*grid, queries);
    ctx.dec_in = hcat(ctx.psi, broadcast_rows(mu3, n));
  } else {
    require(per_point != nullptr, "decode_raw: missing per-point features");
    ctx.dec_in = hcat(
        hcat(MatX<T>(*per_point), broadcast_rows(mu1, n)),
        hcat(broadcast_rows(mu2, n), broadcast_rows(mu3, n)));
  }
  ctx.raw = decoder_.forward(params_, ctx.dec_in, &ctx.cache);
}

template <typename T>
void Network<T>::transforms_from_raw(const MatX<T>& raw,
                                     geom::PointTransforms& out) const {
  const Eigen::Index n = raw.rows();
  out.rows.resize(static_cast<std::size_t>(n));
  const double ts = cfg_.translation_scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat34 m;
    if (cfg_.rotation_param == RotationParam::six_d) {
      // Identity basis offset keeps the zero-initialized head at identity.
      Eigen::Matrix<T, 3, 1> a(raw(i, 0) + T(1), raw(i, 1), raw(i, 2));
      Eigen::Matrix<T, 3, 1> b(raw(i, 3), raw(i, 4) + T(1), raw(i, 5));
      const T na = a.norm();
      const Eigen::Matrix<T, 3, 1> b1 = a / na;
      const Eigen::Matrix<T, 3, 1> r = b - b1.dot(b) * b1;
      const Eigen::Matrix<T, 3, 1> b2 = r / r.norm();
      const Eigen::Matrix<T, 3, 1> b3 = b1.cross(b2);
      m.col(0) = b1.template cast<double>();
      m.col(1) = b2.template cast<double>();
      m.col(2) = b3.template cast<double>();
      m.col(3) = Vec3(ts * static_cast<double>(raw(i, 6)),
                      ts * static_cast<double>(raw(i, 7)),
                      ts * static_cast<double>(raw(i, 8)));
    } else {
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          m(r, c) = static_cast<double>(raw(i, 3 * r + c)) + (r == c ? 1.0 : 0.0);
        }
      }
      m.col(3) = Vec3(ts * static_cast<double>(raw(i, 9)),
                      ts * static_cast<double>(raw(i, 10)),
                      ts * static_cast<double>(raw(i, 11)));
    }
    out.rows[static_cast<std::size_t>(i)] = m;
  }
}

template <typename T>
geom::PointTransforms Network<T>::decode_transforms(const geom::Grid3D<T>& grid,
                                                    const PointCloud& i1n,
                                                    const MatX<T>& mu3) const {
  check_normalized(i1n, "decode_transforms");
  require(cfg_.variant == ModelVariant::nir,
          "decode_transforms: grid path requires the nir variant");
  DecodeContext<T> ctx;
  decode_raw(&grid, nullptr, i1n, mu3, mu3, mu3, ctx);
  geom::PointTransforms out;
  transforms_from_raw(ctx.raw, out);
  return out;
}

// ---- full chain ----

template <typename T>
PointCloud Network<T>::forward(const TrainingTuple& tuple) const {
  ForwardContext<T> ctx;
  return forward(tuple, ctx);
}

template <typename T>
PointCloud Network<T>::forward(const TrainingTuple& tuple,
                               ForwardContext<T>& ctx) const {
  require(tuple.i1.rows() == cfg_.n_points && tuple.i2.rows() == cfg_.n_points,
          "forward: tuple cloud size differs from ModelConfig.n_points");
  require(tuple.phi1.size() == cfg_.num_joints &&
              tuple.phi2.size() == cfg_.num_joints &&
              tuple.phi3.size() == cfg_.num_joints,
          "forward: pose length differs from ModelConfig.num_joints");
  const geom::NormalizedPair np = geom::normalize_pair(tuple.i1, tuple.i2);
  ctx.nmap = np.map;
  ctx.i1n = np.a;
  ctx.i2n = np.b;
  encode_geometry(ctx.i1n, ctx.i2n, ctx.enc);
  const MatX<T> mu1 = encode_pose(tuple.phi1, ctx.pose1);
  const MatX<T> mu2 = encode_pose(tuple.phi2, ctx.pose2);
  const MatX<T> mu3 = encode_pose(tuple.phi3, ctx.pose3);
  if (cfg_.variant == ModelVariant::nir) {
    ctx.grid = build_transformation_grid(ctx.enc.out.g_geo, mu1, mu2);
    decode_raw(&ctx.grid, nullptr, ctx.i1n, mu1, mu2, mu3, ctx.dec);
  } else {
    decode_raw(nullptr, &ctx.enc.out.per_point, ctx.i1n, mu1, mu2, mu3,
               ctx.dec);
  }
  geom::PointTransforms tf;
  transforms_from_raw(ctx.dec.raw, tf);
  ctx.pred_n = geom::apply_point_transforms(tf, ctx.i1n);
  ctx.pred = ctx.nmap.invert(ctx.pred_n);
  return ctx.pred;
}

template <typename T>
PointCloud Network<T>::forward_no_nir(const TrainingTuple& tuple) const {
  require(cfg_.variant == ModelVariant::no_nir,
          "forward_no_nir: network was not configured as the no-NIR variant");
  return forward(tuple);
}

template <typename T>
void Network<T>::backward(const ForwardContext<T>& ctx, const GradCloud& dpred) {
  const Eigen::Index n = ctx.i1n.rows();
  require(dpred.rows() == n, "backward: gradient size mismatch");
  const double inv_scale = 1.0 / ctx.nmap.scale;

  // Through denormalization and the per-point transform application.
  MatX<T> draw = MatX<T>::Zero(n, cfg_.decoder_output_width());
  const double ts = cfg_.translation_scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Matrix<T, 3, 1> g(
        static_cast<T>(dpred(i, 0) * inv_scale),
        static_cast<T>(dpred(i, 1) * inv_scale),
        static_cast<T>(dpred(i, 2) * inv_scale));
    const Eigen::Matrix<T, 3, 1> x(static_cast<T>(ctx.i1n(i, 0)),
                                   static_cast<T>(ctx.i1n(i, 1)),
                                   static_cast<T>(ctx.i1n(i, 2)));
    if (cfg_.rotation_param == RotationParam::six_d) {
      for (int c = 0; c < 3; ++c) draw(i, 6 + c) = static_cast<T>(ts) * g[c];
      // Recompute the Gram-Schmidt intermediates for this row.
      Eigen::Matrix<T, 3, 1> a(ctx.dec.raw(i, 0) + T(1), ctx.dec.raw(i, 1),
                               ctx.dec.raw(i, 2));
      Eigen::Matrix<T, 3, 1> b(ctx.dec.raw(i, 3), ctx.dec.raw(i, 4) + T(1),
                               ctx.dec.raw(i, 5));
      const T na = a.norm();
      const Eigen::Matrix<T, 3, 1> b1 = a / na;
      const T p = b1.dot(b);
      const Eigen::Matrix<T, 3, 1> r = b - p * b1;
      const T nr = r.norm();
      const Eigen::Matrix<T, 3, 1> b2 = r / nr;
      // dR columns: dL/dR = g x^T.
      const Eigen::Matrix<T, 3, 1> g1c = g * x[0];
      const Eigen::Matrix<T, 3, 1> g2c = g * x[1];
      const Eigen::Matrix<T, 3, 1> g3c = g * x[2];
      const Eigen::Matrix<T, 3, 1> g2 = g2c + g3c.cross(b1);
      const Eigen::Matrix<T, 3, 1> dr = (g2 - b2 * b2.dot(g2)) / nr;
      const Eigen::Matrix<T, 3, 1> db = dr - b1 * b1.dot(dr);
      const Eigen::Matrix<T, 3, 1> g1 =
          g1c + b2.cross(g3c) - b * dr.dot(b1) - p * dr;
      const Eigen::Matrix<T, 3, 1> da = (g1 - b1 * b1.dot(g1)) / na;
      for (int c = 0; c < 3; ++c) {
        draw(i, c) = da[c];
        draw(i, 3 + c) = db[c];
      }
    } else {
      for (int rr = 0; rr < 3; ++rr) {
        for (int cc = 0; cc < 3; ++cc) draw(i, 3 * rr + cc) = g[rr] * x[cc];
      }
      for (int c = 0; c < 3; ++c) draw(i, 9 + c) = static_cast<T>(ts) * g[c];
    }
  }

  const MatX<T> d_dec_in = decoder_.backward(params_, ctx.dec.cache, draw);

  MatX<T> dmu1 = MatX<T>::Zero(1, cfg_.d_mu());
  MatX<T> dmu2 = MatX<T>::Zero(1, cfg_.d_mu());
  MatX<T> dmu3 = MatX<T>::Zero(1, cfg_.d_mu());
  MatX<T> dfused;

  if (cfg_.variant == ModelVariant::nir) {
    const int d_psi = cfg_.d_psi();
    dmu3.row(0) = d_dec_in.rightCols(cfg_.d_mu()).colwise().sum();
    // Query adjoint into the transformation grid.
    MatX<T> dgrid = MatX<T>::Zero(ctx.grid.data.rows(), d_psi);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto st = geom::trilinear_stencil(ctx.grid.K, ctx.grid.extent,
                                              ctx.i1n.row(i).transpose());
      for (int s = 0; s < 8; ++s) {
        dgrid.row(st.rows[s]) +=
            static_cast<T>(st.w[s]) * d_dec_in.row(i).head(d_psi);
      }
    }
    dmu1.row(0) = dgrid.middleCols(cfg_.c_geo, cfg_.d_mu()).colwise().sum();
    dmu2.row(0) = dgrid.rightCols(cfg_.d_mu()).colwise().sum();
    const MatX<T> d_in0 =
        unet_backward(ctx.enc.unet, MatX<T>(dgrid.leftCols(cfg_.c_geo)));
    // Splat adjoint back to the projected sub-sampled features.
    MatX<T> d_feat =
        MatX<T>::Zero(ctx.enc.grid_in_feat.rows(), ctx.enc.grid_in_feat.cols());
    for (Eigen::Index i = 0; i < ctx.enc.grid_in_feat.rows(); ++i) {
      const auto st =
          geom::trilinear_stencil(cfg_.grid_k, grid_extent(),
                                  ctx.enc.sa2_a.out_pos.row(i).transpose());
      for (int s = 0; s < 8; ++s) {
        const double nw = ctx.enc.splat.node_weight[st.rows[s]];
        if (nw > 1e-12) {
          d_feat.row(i) +=
              static_cast<T>(st.w[s] / nw) * d_in0.row(st.rows[s]);
        }
      }
    }
    dfused = grid_in_.backward(params_, ctx.enc.grid_in_cache, d_feat);
  } else {
    const int pp = cfg_.per_point_dim;
    const int dm = cfg_.d_mu();
    dmu1.row(0) = d_dec_in.middleCols(pp, dm).colwise().sum();
    dmu2.row(0) = d_dec_in.middleCols(pp + dm, dm).colwise().sum();
    dmu3.row(0) = d_dec_in.rightCols(dm).colwise().sum();
    dfused = fp_backward(ctx.enc.fp, MatX<T>(d_dec_in.leftCols(pp)),
                         static_cast<int>(ctx.enc.out.fused.rows()));
  }

  // Attention fusion adjoint.
  const int d = cfg_.d();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  const MatX<T>& attn = ctx.enc.out.attention;
  MatX<T> dh1 = dfused.leftCols(d);
  const MatX<T> d_attended = dfused.rightCols(d);
  MatX<T> dh2 = attn.transpose() * d_attended;
  MatX<T> dp = d_attended * ctx.enc.out.h2.transpose();
  MatX<T> ds(dp.rows(), dp.cols());
  for (Eigen::Index r = 0; r < dp.rows(); ++r) {
    const T dot = dp.row(r).dot(attn.row(r));
    ds.row(r) = (attn.row(r).array() * (dp.row(r).array() - dot)).matrix();
  }
  dh1.noalias() += ds * ctx.enc.out.h2 * scale;
  dh2.noalias() += ds.transpose() * ctx.enc.out.h1 * scale;

  // Siamese set-abstraction adjoints.
  const MatX<T> d_sa1a = sa_backward(sa2_, ctx.enc.sa2_a, dh1, cfg_.sa1_points,
                                     cfg_.sa1_widths[1]);
  sa_backward(sa1_, ctx.enc.sa1_a, d_sa1a, cfg_.n_points, 0);
  const MatX<T> d_sa1b = sa_backward(sa2_, ctx.enc.sa2_b, dh2, cfg_.sa1_points,
                                     cfg_.sa1_widths[1]);
  sa_backward(sa1_, ctx.enc.sa1_b, d_sa1b, cfg_.n_points, 0);

  // Shared pose encoder accumulates from all three calls.
  pose_mlp_.backward(params_, ctx.pose1.cache, dmu1);
  pose_mlp_.backward(params_, ctx.pose2.cache, dmu2);
  pose_mlp_.backward(params_, ctx.pose3.cache, dmu3);
}

template <typename T>
GridField Network<T>::grid_point_transforms(const geom::Grid3D<T>& grid,
                                            const MatX<T>& mu3) const {
  require(cfg_.variant == ModelVariant::nir,
          "grid_point_transforms: requires the nir variant");
  require(grid.C == cfg_.d_psi(), "grid_point_transforms: channel mismatch");
  const int k = grid.K;
  GridField field;
  field.positions.resize(static_cast<Eigen::Index>(k) * k * k, 3);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      for (int kk = 0; kk < k; ++kk) {
        field.positions.row(grid.node_index(i, j, kk)) =
            grid.node_position(i, j, kk).transpose();
      }
    }
  }
  // A query placed exactly on a node returns that node's feature, so the
  // decoder input is the grid data itself.
  DecodeContext<T> ctx;
  ctx.dec_in = hcat(grid.data, broadcast_rows(mu3, grid.data.rows()));
  ctx.raw = decoder_.forward(params_, ctx.dec_in, &ctx.cache);
  geom::PointTransforms tf;
  transforms_from_raw(ctx.raw, tf);
  const PointCloud moved = geom::apply_point_transforms(tf, field.positions);
  field.displacements = moved - field.positions;
  return field;
}

template class Network<float>;
template class Network<double>;

}  // namespace partmotion::model
