// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/config.hpp"

#include <fstream>

namespace twinmesh {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("write failed: " + path.string());
}

ServeConfig serve_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ServeConfig config;
  try {
    config.idle_threshold_ms = j.value("idle_threshold_ms", std::int64_t{60'000});
    if (config.idle_threshold_ms <= 0) throw ConfigError("idle_threshold_ms must be positive");
    if (j.contains("rules")) config.rules = rules_from_json({{"rules", j["rules"]}});
    for (const auto& d : j.value("devices", nlohmann::json::array())) {
      auto device = device_config_from_json(d);
      auto device_rules = rules_from_json({{"rules", device.rules}});
      config.rules.insert(config.rules.end(), device_rules.begin(), device_rules.end());
      config.devices.push_back(std::move(device));
    }
    if (j.contains("policy")) {
      config.policy = policy_from_json(j["policy"]);
    } else if (j.contains("policy_file")) {
      config.policy = policy_from_json(read_json_file(base_dir / j["policy_file"].get<std::string>()));
    }
    if (j.contains("credentials")) {
      config.credentials = CredentialStore::from_json(j["credentials"]);
    } else if (j.contains("credentials_file")) {
      config.credentials = CredentialStore::from_json(
          read_json_file(base_dir / j["credentials_file"].get<std::string>()));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return config;
}

ServeConfig load_serve_config(const std::filesystem::path& path) {
  return serve_config_from_json(read_json_file(path), path.parent_path());
}

}  // namespace twinmesh
