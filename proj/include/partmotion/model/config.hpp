#pragma once

#include <array>
#include <string>

#include <json.hpp>

namespace partmotion::model {

enum class RotationParam { six_d, raw_affine };
enum class ModelVariant { nir, no_nir };

// Architecture hyperparameters. `paper()` carries the reference sizes
// (N=8192, N'=128 at d=256, 32^3 grid with 64 channels, pose MLP 64/128/256);
// `desk()` is the CPU-scale default; `micro()` is the double-precision
// gradient-check configuration.
struct ModelConfig {
  int n_points = 512;
  int n_sub = 128;  // N': points after the second set-abstraction level
  int sa1_points = 256;
  double sa1_radius = 0.10;
  double sa2_radius = 0.25;
  int max_neighbors = 16;
  std::array<int, 2> sa1_widths{32, 32};
  std::array<int, 2> sa2_widths{64, 64};  // last entry is d
  int per_point_dim = 64;                 // dense per-point feature width
  int fp_hidden = 64;
  int grid_k = 16;
  int splat_channels = 16;                // projection width ahead of the splat
  std::array<int, 3> unet_widths{16, 32, 48};
  int c_geo = 32;
  std::array<int, 3> pose_widths{32, 64, 64};  // last entry is d_mu
  std::array<int, 2> decoder_hidden{128, 128};
  RotationParam rotation_param = RotationParam::six_d;
  ModelVariant variant = ModelVariant::nir;
  int num_joints = 1;
  double translation_scale = 0.1;

  int d() const { return sa2_widths[1]; }
  int d_mu() const { return pose_widths[2]; }
  int d_psi() const { return c_geo + 2 * d_mu(); }
  int decoder_input_width() const {
    return variant == ModelVariant::nir ? d_psi() + d_mu()
                                        : per_point_dim + 3 * d_mu();
  }
  int decoder_output_width() const {
    return rotation_param == RotationParam::six_d ? 9 : 12;
  }

  void validate() const;

  static ModelConfig desk();
  static ModelConfig paper();
  static ModelConfig micro();
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

std::string to_string(RotationParam p);
std::string to_string(ModelVariant v);

}  // namespace partmotion::model
