#include "partmotion/model/checkpoint.hpp"

#include <fstream>

#include "partmotion/util/digest.hpp"

namespace partmotion::model {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

std::string blob_name(const std::string& param_name) {
  return param_name + ".bin";
}

}  // namespace

void save_checkpoint(const NetworkF& net, const fs::path& dir,
                     const json* extra) {
  fs::create_directories(dir);
  json manifest{{"format_version", kCheckpointVersion},
                {"model", to_json(net.config())},
                {"params", json::array()}};
  if (extra != nullptr) manifest["extra"] = *extra;

  for (const auto& [name, entry] : net.params()) {
    const auto& value = entry.value;
    const std::size_t bytes =
        static_cast<std::size_t>(value.size()) * sizeof(float);
    const std::uint64_t digest = fnv1a64(value.data(), bytes);
    manifest["params"].push_back(json{{"name", name},
                                      {"rows", value.rows()},
                                      {"cols", value.cols()},
                                      {"digest", to_hex(digest)}});
    std::ofstream out(dir / blob_name(name), std::ios::binary);
    out.write(reinterpret_cast<const char*>(value.data()),
              static_cast<std::streamsize>(bytes));
    if (!out) {
      throw CheckpointError("failed writing blob for " + name);
    }
  }
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw CheckpointError("failed writing manifest.json");
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw CheckpointFormatError("missing manifest.json in " + dir.string());
  }
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("malformed manifest.json: ") +
                                e.what());
  }

  int version = -1;
  ModelConfig cfg;
  try {
    version = manifest.at("format_version").get<int>();
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("manifest missing version: ") +
                                e.what());
  }
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint format_version " +
                                 std::to_string(version) + " unsupported");
  }
  try {
    cfg = model_config_from_json(manifest.at("model"));
  } catch (const std::exception& e) {
    throw CheckpointFormatError(std::string("bad model config in manifest: ") +
                                e.what());
  }

  LoadedCheckpoint loaded{NetworkF(cfg)};
  loaded.manifest = manifest;
  auto& params = loaded.network.params();

  std::size_t seen = 0;
  try {
    for (const auto& p : manifest.at("params")) {
      const std::string name = p.at("name").get<std::string>();
      const auto rows = p.at("rows").get<Eigen::Index>();
      const auto cols = p.at("cols").get<Eigen::Index>();
      const std::string digest_hex = p.at("digest").get<std::string>();
      if (!params.contains(name)) {
        throw CheckpointFormatError("manifest names unknown parameter " + name);
      }
      auto& value = params.value(name);
      if (value.rows() != rows || value.cols() != cols) {
        throw CheckpointFormatError("shape mismatch for parameter " + name);
      }
      const fs::path blob = dir / blob_name(name);
      std::ifstream bin(blob, std::ios::binary);
      if (!bin) {
        throw CheckpointMissingBlobError("missing blob " + blob.string());
      }
      const std::size_t bytes =
          static_cast<std::size_t>(value.size()) * sizeof(float);
      bin.read(reinterpret_cast<char*>(value.data()),
               static_cast<std::streamsize>(bytes));
      if (bin.gcount() != static_cast<std::streamsize>(bytes) ||
          bin.peek() != std::ifstream::traits_type::eof()) {
        throw CheckpointFormatError("blob size mismatch for " + name);
      }
      const std::uint64_t digest = fnv1a64(value.data(), bytes);
      if (to_hex(digest) != digest_hex) {
        throw CheckpointDigestError("content digest mismatch for " + name);
      }
      ++seen;
    }
  } catch (const json::exception& e) {
    throw CheckpointFormatError(std::string("malformed params entry: ") +
                                e.what());
  }
  if (seen != params.size()) {
    throw CheckpointFormatError(
        "manifest parameter list does not cover the model");
  }
  return loaded;
}

}  // namespace partmotion::model
