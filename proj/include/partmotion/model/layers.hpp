#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "partmotion/model/params.hpp"

namespace partmotion::model {

template <typename T>
MatX<T> relu(const MatX<T>& x) {
  return x.cwiseMax(T(0));
}

// dy masked by the post-activation output (y > 0 <=> pre-activation > 0).
template <typename T>
MatX<T> relu_backward(const MatX<T>& y, const MatX<T>& dy) {
  return ((y.array() > T(0)).template cast<T>() * dy.array()).matrix();
}

template <typename T>
struct MlpCache {
  std::vector<MatX<T>> inputs;   // input to each linear layer
  std::vector<MatX<T>> outputs;  // post-activation output of each layer
};

// Row-wise shared MLP: linears named <prefix>.l<i>.{W,b} with ReLU between
// layers and optionally after the last.
template <typename T>
struct Mlp {
  std::string prefix;
  std::vector<int> widths;  // in, hidden..., out
  bool relu_last = false;

  int layers() const { return static_cast<int>(widths.size()) - 1; }
  bool relu_at(int i) const { return i + 1 < layers() || relu_last; }
  std::string w_name(int i) const {
    return prefix + ".l" + std::to_string(i) + ".W";
  }
  std::string b_name(int i) const {
    return prefix + ".l" + std::to_string(i) + ".b";
  }

  void add_params(ParamStore<T>& ps) const {
    for (int i = 0; i < layers(); ++i) {
      ps.add(w_name(i), widths[static_cast<std::size_t>(i) + 1],
             widths[static_cast<std::size_t>(i)]);
      ps.add(b_name(i), 1, widths[static_cast<std::size_t>(i) + 1]);
    }
  }

  // He-normal weights, zero biases; `zero_last` leaves the final linear at
  // zero (identity-at-init decoder head).
  void init_he(ParamStore<T>& ps, Rng& rng, bool zero_last = false) const {
    for (int i = 0; i < layers(); ++i) {
      if (zero_last && i + 1 == layers()) continue;
      MatX<T>& w = ps.value(w_name(i));
      const double s =
          std::sqrt(2.0 / static_cast<double>(widths[static_cast<std::size_t>(i)]));
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          w(r, c) = static_cast<T>(s * rng.normal());
        }
      }
    }
  }

  MatX<T> forward(const ParamStore<T>& ps, const MatX<T>& x,
                  MlpCache<T>* cache) const {
    MatX<T> h = x;
    if (cache != nullptr) {
      cache->inputs.assign(static_cast<std::size_t>(layers()), {});
      cache->outputs.assign(static_cast<std::size_t>(layers()), {});
    }
    for (int i = 0; i < layers(); ++i) {
      if (cache != nullptr) cache->inputs[static_cast<std::size_t>(i)] = h;
      h = (h * ps.value(w_name(i)).transpose()).rowwise() +
          ps.value(b_name(i)).row(0);
      if (relu_at(i)) h = relu(h);
      if (cache != nullptr) cache->outputs[static_cast<std::size_t>(i)] = h;
    }
    return h;
  }

  // Accumulates parameter gradients, returns gradient w.r.t. the input.
  MatX<T> backward(ParamStore<T>& ps, const MlpCache<T>& cache,
                   MatX<T> dy) const {
    for (int i = layers() - 1; i >= 0; --i) {
      if (relu_at(i)) {
        dy = relu_backward(cache.outputs[static_cast<std::size_t>(i)], dy);
      }
      ps.grad(w_name(i)).noalias() +=
          dy.transpose() * cache.inputs[static_cast<std::size_t>(i)];
      ps.grad(b_name(i)).row(0) += dy.colwise().sum();
      dy = dy * ps.value(w_name(i));
    }
    return dy;
  }
};

inline int grid_row(int K, int i, int j, int k) { return (i * K + j) * K + k; }

// 3x3x3 (or 1x1x1) convolution over a K^3 lattice stored as (K^3 x C)
// row-major, zero padding, stride 1. Weights: (c_out x ksize^3*c_in).
template <typename T>
struct Conv3 {
  std::string name;
  int c_in = 0;
  int c_out = 0;
  int ksize = 3;  // 3 or 1

  int taps() const { return ksize * ksize * ksize; }
  std::string w_name() const { return name + ".W"; }
  std::string b_name() const { return name + ".b"; }

  void add_params(ParamStore<T>& ps) const {
    ps.add(w_name(), c_out, taps() * c_in);
    ps.add(b_name(), 1, c_out);
  }

  void init_he(ParamStore<T>& ps, Rng& rng) const {
    MatX<T>& w = ps.value(w_name());
    const double s = std::sqrt(2.0 / static_cast<double>(taps() * c_in));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = static_cast<T>(s * rng.normal());
      }
    }
  }

  MatX<T> im2col(const MatX<T>& in, int K) const {
    const int v = K * K * K;
    MatX<T> col = MatX<T>::Zero(v, taps() * c_in);
    const T* src = in.data();
    T* dst = col.data();
    const std::size_t src_stride = static_cast<std::size_t>(c_in);
    const std::size_t dst_stride = static_cast<std::size_t>(taps()) * c_in;
    int tap = 0;
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int dk = -1; dk <= 1; ++dk, ++tap) {
          const std::size_t tap_off = static_cast<std::size_t>(tap) * c_in;
          for (int i = std::max(0, -di); i < K - std::max(0, di); ++i) {
            for (int j = std::max(0, -dj); j < K - std::max(0, dj); ++j) {
              const int k_lo = std::max(0, -dk);
              const int k_hi = K - std::max(0, dk);
              const T* s = src + static_cast<std::size_t>(
                                     grid_row(K, i + di, j + dj, k_lo + dk)) *
                                     src_stride;
              T* d = dst + static_cast<std::size_t>(grid_row(K, i, j, k_lo)) *
                               dst_stride +
                     tap_off;
              for (int k = k_lo; k < k_hi; ++k) {
                std::memcpy(d, s, src_stride * sizeof(T));
                s += src_stride;
                d += dst_stride;
              }
            }
          }
        }
      }
    }
    return col;
  }

  MatX<T> forward(const ParamStore<T>& ps, const MatX<T>& in, int K) const {
    if (ksize == 1) {
      return ((in * ps.value(w_name()).transpose()).rowwise() +
              ps.value(b_name()).row(0));
    }
    const MatX<T> col = im2col(in, K);
    return (col * ps.value(w_name()).transpose()).rowwise() +
           ps.value(b_name()).row(0);
  }

  // Accumulates dW/db, returns gradient w.r.t. the input lattice.
  MatX<T> backward(ParamStore<T>& ps, const MatX<T>& in, const MatX<T>& dy,
                   int K) const {
    ps.grad(b_name()).row(0) += dy.colwise().sum();
    if (ksize == 1) {
      ps.grad(w_name()).noalias() += dy.transpose() * in;
      return dy * ps.value(w_name());
    }
    const MatX<T> col = im2col(in, K);
    ps.grad(w_name()).noalias() += dy.transpose() * col;
    const MatX<T> dcol = dy * ps.value(w_name());
    MatX<T> din = MatX<T>::Zero(in.rows(), in.cols());
    const T* src = dcol.data();
    T* dst = din.data();
    const std::size_t src_stride = static_cast<std::size_t>(taps()) * c_in;
    const std::size_t dst_stride = static_cast<std::size_t>(c_in);
    int tap = 0;
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int dk = -1; dk <= 1; ++dk, ++tap) {
          const std::size_t tap_off = static_cast<std::size_t>(tap) * c_in;
          for (int i = std::max(0, -di); i < K - std::max(0, di); ++i) {
            for (int j = std::max(0, -dj); j < K - std::max(0, dj); ++j) {
              const int k_lo = std::max(0, -dk);
              const int k_hi = K - std::max(0, dk);
              const T* s = src + static_cast<std::size_t>(
                                     grid_row(K, i, j, k_lo)) *
                                     src_stride +
                           tap_off;
              T* d = dst + static_cast<std::size_t>(
                               grid_row(K, i + di, j + dj, k_lo + dk)) *
                               dst_stride;
              for (int k = k_lo; k < k_hi; ++k) {
                for (std::size_t c = 0; c < dst_stride; ++c) d[c] += s[c];
                s += src_stride;
                d += dst_stride;
              }
            }
          }
        }
      }
    }
    return din;
  }
};

// 2x2x2 average pooling: (K^3 x C) -> ((K/2)^3 x C).
template <typename T>
MatX<T> avg_pool2(const MatX<T>& in, int K) {
  const int half = K / 2;
  MatX<T> out = MatX<T>::Zero(half * half * half, in.cols());
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        out.row(grid_row(half, i / 2, j / 2, k / 2)) +=
            in.row(grid_row(K, i, j, k));
      }
    }
  }
  return out / T(8);
}

template <typename T>
MatX<T> avg_pool2_backward(const MatX<T>& dout, int K) {
  const int half = K / 2;
  MatX<T> din(K * K * K, dout.cols());
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        din.row(grid_row(K, i, j, k)) =
            dout.row(grid_row(half, i / 2, j / 2, k / 2)) / T(8);
      }
    }
  }
  return din;
}

// Nearest-neighbor upsampling: (K^3 x C) -> ((2K)^3 x C).
template <typename T>
MatX<T> upsample2(const MatX<T>& in, int K) {
  const int big = 2 * K;
  MatX<T> out(big * big * big, in.cols());
  for (int i = 0; i < big; ++i) {
    for (int j = 0; j < big; ++j) {
      for (int k = 0; k < big; ++k) {
        out.row(grid_row(big, i, j, k)) =
            in.row(grid_row(K, i / 2, j / 2, k / 2));
      }
    }
  }
  return out;
}

template <typename T>
MatX<T> upsample2_backward(const MatX<T>& dout, int K) {
  const int big = 2 * K;
  MatX<T> din = MatX<T>::Zero(K * K * K, dout.cols());
  for (int i = 0; i < big; ++i) {
    for (int j = 0; j < big; ++j) {
      for (int k = 0; k < big; ++k) {
        din.row(grid_row(K, i / 2, j / 2, k / 2)) +=
            dout.row(grid_row(big, i, j, k));
      }
    }
  }
  return din;
}

}  // namespace partmotion::model
