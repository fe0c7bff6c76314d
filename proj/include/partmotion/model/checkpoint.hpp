#pragma once

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "partmotion/model/network.hpp"

namespace partmotion::model {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointVersionError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointDigestError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointMissingBlobError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct CheckpointFormatError : CheckpointError {
  using CheckpointError::CheckpointError;
};

struct LoadedCheckpoint {
  NetworkF network;
  nlohmann::json manifest;

  explicit LoadedCheckpoint(NetworkF net) : network(std::move(net)) {}
};

// Directory layout: manifest.json (format_version, model config echo,
// parameter tree with shapes and content digests, optional extra payload)
// plus one little-endian float32 blob per parameter group named by tree path.
// Round-trips are bit-exact; digests are verified on load.
void save_checkpoint(const NetworkF& net, const std::filesystem::path& dir,
                     const nlohmann::json* extra = nullptr);

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace partmotion::model
