// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinmesh/access.hpp"
#include "twinmesh/credentials.hpp"
#include "twinmesh/device.hpp"
#include "twinmesh/tags.hpp"

namespace twinmesh {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything `twinmesh serve` needs. Policy and credentials may be inline
/// ("policy", "credentials") or in separate files ("policy_file",
/// "credentials_file", resolved relative to the config file).
struct ServeConfig {
  std::int64_t idle_threshold_ms = 60'000;
  std::vector<TagRule> rules;
  std::vector<DeviceConfig> devices;
  AccessPolicy policy;
  CredentialStore credentials;
};

/// Throws ConfigError with the offending file in the message.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

ServeConfig load_serve_config(const std::filesystem::path& path);
ServeConfig serve_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

}  // namespace twinmesh
