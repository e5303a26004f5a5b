// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinmesh/access.hpp"

namespace twinmesh {

/// Argon2id cost parameters (libsodium crypto_pwhash).
struct HashCost {
  std::uint64_t ops_limit;
  std::size_t mem_limit;

  static HashCost interactive();
  // Minimum cost; for tests and throwaway stores only.
  static HashCost minimum();
};

/// Throws std::runtime_error if hashing fails (out of memory).
std::string hash_password(std::string_view password, HashCost cost = HashCost::interactive());
bool verify_password(std::string_view encoded_hash, std::string_view password);

/// Principals plus pre-shared keys.
///
/// File format:
///   {"principals":[{"id":"app1","roles":["app"],"password_hash":"$argon2id$..."},
///                  {"id":"car1-dev","roles":["device"],"device":"car1","psk_id":"k1"}],
///    "psks":[{"id":"k1","key_hex":"0011..."}]}
class CredentialStore {
 public:
  /// Throws std::invalid_argument on duplicate id or a device principal
  /// without a device binding.
  void add(Principal principal);
  void add_psk(std::string key_id, std::vector<std::uint8_t> key);

  const Principal* find(std::string_view id) const;

  std::optional<Principal> authenticate_password(std::string_view id,
                                                 std::string_view password) const;
  std::optional<Principal> authenticate_psk(std::string_view id,
                                            std::span<const std::uint8_t> key) const;

  const std::map<std::string, Principal, std::less<>>& principals() const { return principals_; }

  static CredentialStore from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

 private:
  std::map<std::string, Principal, std::less<>> principals_;
  std::map<std::string, std::vector<std::uint8_t>, std::less<>> psks_;
};

}  // namespace twinmesh
