#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "partmotion/synthgen/tuple.hpp"

namespace partmotion::synthgen {

// Distinct read-failure cases, each its own type.
struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DatasetFormatError : DatasetError {
  using DatasetError::DatasetError;
};
struct DatasetTruncationError : DatasetError {
  using DatasetError::DatasetError;
};
struct DatasetVersionError : DatasetError {
  using DatasetError::DatasetError;
};

struct DatasetMeta {
  int format_version = 1;
  std::string category;
  int n_points = 0;
  int n_objects = 0;
  int tuples_per_object = 0;
  int joints_per_object = 0;
};

struct DatasetObject {
  ArticulatedObject object;
  std::vector<TrainingTuple> tuples;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<DatasetObject> objects;

  int total_tuples() const {
    int n = 0;
    for (const auto& o : objects) n += static_cast<int>(o.tuples.size());
    return n;
  }
  const TrainingTuple& tuple(int flat_index) const;
  const DatasetObject& object_of(int flat_index) const;
};

// Layout: meta.json plus per object obj_<idx>.json (category, seed, joint
// specs) and obj_<idx>.bin — little-endian float32, per tuple
// [I1 | I2 | I3] (each N x 3 row-major), then phi1, phi2, phi3 (J floats
// each), then the movable mask (N bytes, 0/1). No padding. Clouds and poses
// are quantized to float32 on write; the round trip is bit-exact.
// `delta_min` <= 0 selects the per-joint default separation.
void write_dataset(const std::vector<ArticulatedObject>& objects,
                   int tuples_per_object, const std::filesystem::path& path,
                   double delta_min = 0.0);

Dataset read_dataset(const std::filesystem::path& path);

}  // namespace partmotion::synthgen
