#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "partmotion/model/config.hpp"
#include "partmotion/train/trainer.hpp"

namespace partmotion::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Resolved settings: model + train (train carries the loss block).
struct CliConfig {
  model::ModelConfig model;
  train::TrainConfig train;
};

nlohmann::json default_config_json();

// defaults <- optional JSON file <- dotted-path overrides ("a.b.c=value").
// Unknown keys and type mismatches are rejected; the result always parses
// into CliConfig. `env_seed` (when set) replaces the default seed before
// merging, so explicit file/override values still win.
nlohmann::json resolve_config(
    const std::optional<std::filesystem::path>& file,
    const std::vector<std::string>& overrides,
    std::optional<std::uint64_t> env_seed = std::nullopt);

CliConfig config_from_json(const nlohmann::json& j);

std::string config_hash_of(const nlohmann::json& resolved);

}  // namespace partmotion::cli
