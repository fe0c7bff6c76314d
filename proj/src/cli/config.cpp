#include "partmotion/cli/config.hpp"

#include <fstream>

#include "partmotion/util/digest.hpp"

namespace partmotion::cli {

using nlohmann::json;

json default_config_json() {
  return json{{"model", model::to_json(model::ModelConfig::desk())},
              {"train", train::to_json(train::TrainConfig{})}};
}

namespace {

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

void merge_checked(json& base, const json& incoming, const std::string& path) {
  if (!incoming.is_object()) {
    throw ConfigError("config section '" + path + "' must be an object");
  }
  for (auto it = incoming.begin(); it != incoming.end(); ++it) {
    const std::string child = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) {
      throw ConfigError("unknown config key: " + child);
    }
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), child);
    } else {
      if (!same_kind(slot, it.value())) {
        throw ConfigError("config key '" + child + "' has the wrong type");
      }
      slot = it.value();
    }
  }
}

json parse_override_value(const json& slot, const std::string& text,
                          const std::string& path) {
  try {
    if (slot.is_string()) return json(text);
    if (slot.is_boolean()) {
      if (text == "true") return json(true);
      if (text == "false") return json(false);
      throw ConfigError("expected true/false");
    }
    if (slot.is_number_integer() || slot.is_number_unsigned()) {
      return json(std::stoll(text));
    }
    if (slot.is_number_float()) return json(std::stod(text));
    if (slot.is_array()) return json::parse(text);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    // fall through to the error below
  }
  throw ConfigError("cannot parse override value for '" + path + "': " + text);
}

void apply_override(json& base, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like path.to.key=value: " + spec);
  }
  const std::string path = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);
  json* slot = &base;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot - pos);
    if (!slot->is_object() || !slot->contains(key)) {
      throw ConfigError("unknown config key: " + path);
    }
    slot = &(*slot)[key];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (slot->is_object()) {
    throw ConfigError("override target '" + path + "' is a section");
  }
  *slot = parse_override_value(*slot, value, path);
}

}  // namespace

json resolve_config(const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& overrides,
                    std::optional<std::uint64_t> env_seed) {
  json base = default_config_json();
  if (env_seed.has_value()) base["train"]["seed"] = *env_seed;
  if (file.has_value()) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file: " + file->string());
    json incoming;
    try {
      in >> incoming;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed config file: ") + e.what());
    }
    merge_checked(base, incoming, "");
  }
  for (const auto& o : overrides) apply_override(base, o);
  // Round-trip through the typed structs so invalid values fail here.
  (void)config_from_json(base);
  return base;
}

CliConfig config_from_json(const json& j) {
  CliConfig cfg;
  try {
    cfg.model = model::model_config_from_json(j.at("model"));
    cfg.train = train::train_config_from_json(j.at("train"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

std::string config_hash_of(const json& resolved) {
  return to_hex(fnv1a64(resolved.dump()));
}

}  // namespace partmotion::cli
