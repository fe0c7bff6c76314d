#include "partmotion/model/config.hpp"

#include <stdexcept>

namespace partmotion::model {

using nlohmann::json;

void ModelConfig::validate() const {
  const auto positive = [](int v, const char* what) {
    if (v <= 0) throw std::invalid_argument(std::string("ModelConfig: ") +
                                            what + " must be positive");
  };
  positive(n_points, "n_points");
  positive(n_sub, "n_sub");
  positive(sa1_points, "sa1_points");
  positive(max_neighbors, "max_neighbors");
  positive(per_point_dim, "per_point_dim");
  positive(fp_hidden, "fp_hidden");
  positive(splat_channels, "splat_channels");
  positive(c_geo, "c_geo");
  positive(num_joints, "num_joints");
  for (int w : sa1_widths) positive(w, "sa1_widths");
  for (int w : sa2_widths) positive(w, "sa2_widths");
  for (int w : unet_widths) positive(w, "unet_widths");
  for (int w : pose_widths) positive(w, "pose_widths");
  for (int w : decoder_hidden) positive(w, "decoder_hidden");
  if (sa1_radius <= 0.0 || sa2_radius <= 0.0) {
    throw std::invalid_argument("ModelConfig: radii must be positive");
  }
  if (translation_scale <= 0.0) {
    throw std::invalid_argument("ModelConfig: translation_scale must be > 0");
  }
  if (grid_k < 4) {
    throw std::invalid_argument("ModelConfig: grid_k must be >= 4");
  }
  if (grid_k % 4 != 0) {
    throw std::invalid_argument(
        "ModelConfig: grid_k must be divisible by 4 (two pooling levels)");
  }
  if (!(n_sub <= sa1_points && sa1_points <= n_points)) {
    throw std::invalid_argument(
        "ModelConfig: need n_sub <= sa1_points <= n_points");
  }
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.n_points = 8192;
  c.n_sub = 128;
  c.sa1_points = 1024;
  c.sa1_radius = 0.05;
  c.sa2_radius = 0.2;
  c.max_neighbors = 32;
  c.sa1_widths = {64, 128};
  c.sa2_widths = {256, 256};
  c.per_point_dim = 64;
  c.fp_hidden = 128;
  c.grid_k = 32;
  c.splat_channels = 32;
  c.unet_widths = {64, 96, 128};
  c.c_geo = 64;
  c.pose_widths = {64, 128, 256};
  c.decoder_hidden = {256, 128};
  return c;
}

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.n_points = 16;
  c.n_sub = 8;
  c.sa1_points = 12;
  c.sa1_radius = 0.4;
  c.sa2_radius = 0.8;
  c.max_neighbors = 8;
  c.sa1_widths = {8, 8};
  c.sa2_widths = {16, 16};
  c.per_point_dim = 8;
  c.fp_hidden = 8;
  c.grid_k = 4;
  c.splat_channels = 8;
  c.unet_widths = {8, 12, 16};
  c.c_geo = 8;
  c.pose_widths = {8, 12, 16};
  c.decoder_hidden = {16, 16};
  return c;
}

std::string to_string(RotationParam p) {
  return p == RotationParam::six_d ? "six_d" : "raw_affine";
}

std::string to_string(ModelVariant v) {
  return v == ModelVariant::nir ? "nir" : "no_nir";
}

json to_json(const ModelConfig& c) {
  return json{{"n_points", c.n_points},
              {"n_sub", c.n_sub},
              {"sa1_points", c.sa1_points},
              {"sa1_radius", c.sa1_radius},
              {"sa2_radius", c.sa2_radius},
              {"max_neighbors", c.max_neighbors},
              {"sa1_widths", c.sa1_widths},
              {"sa2_widths", c.sa2_widths},
              {"per_point_dim", c.per_point_dim},
              {"fp_hidden", c.fp_hidden},
              {"grid_k", c.grid_k},
              {"splat_channels", c.splat_channels},
              {"unet_widths", c.unet_widths},
              {"c_geo", c.c_geo},
              {"pose_widths", c.pose_widths},
              {"decoder_hidden", c.decoder_hidden},
              {"rotation_param", to_string(c.rotation_param)},
              {"variant", to_string(c.variant)},
              {"num_joints", c.num_joints},
              {"translation_scale", c.translation_scale}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.n_points = j.at("n_points").get<int>();
    c.n_sub = j.at("n_sub").get<int>();
    c.sa1_points = j.at("sa1_points").get<int>();
    c.sa1_radius = j.at("sa1_radius").get<double>();
    c.sa2_radius = j.at("sa2_radius").get<double>();
    c.max_neighbors = j.at("max_neighbors").get<int>();
    c.sa1_widths = j.at("sa1_widths").get<std::array<int, 2>>();
    c.sa2_widths = j.at("sa2_widths").get<std::array<int, 2>>();
    c.per_point_dim = j.at("per_point_dim").get<int>();
    c.fp_hidden = j.at("fp_hidden").get<int>();
    c.grid_k = j.at("grid_k").get<int>();
    c.splat_channels = j.at("splat_channels").get<int>();
    c.unet_widths = j.at("unet_widths").get<std::array<int, 3>>();
    c.c_geo = j.at("c_geo").get<int>();
    c.pose_widths = j.at("pose_widths").get<std::array<int, 3>>();
    c.decoder_hidden = j.at("decoder_hidden").get<std::array<int, 2>>();
    const std::string rot = j.at("rotation_param").get<std::string>();
    if (rot == "six_d") c.rotation_param = RotationParam::six_d;
    else if (rot == "raw_affine") c.rotation_param = RotationParam::raw_affine;
    else throw std::invalid_argument("unknown rotation_param: " + rot);
    const std::string var = j.at("variant").get<std::string>();
    if (var == "nir") c.variant = ModelVariant::nir;
    else if (var == "no_nir") c.variant = ModelVariant::no_nir;
    else throw std::invalid_argument("unknown variant: " + var);
    c.num_joints = j.at("num_joints").get<int>();
    c.translation_scale = j.at("translation_scale").get<double>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace partmotion::model
