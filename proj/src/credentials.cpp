// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/credentials.hpp"

#include <sodium.h>

#include <stdexcept>

namespace twinmesh {
namespace {

void ensure_sodium() {
  static const bool ready = sodium_init() >= 0;
  if (!ready) throw std::runtime_error("libsodium initialization failed");
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  std::vector<std::uint8_t> out(hex.size() / 2 + 1);
  std::size_t len = 0;
  if (sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr, &len, nullptr) != 0 ||
      len * 2 != hex.size()) {
    throw std::invalid_argument("invalid hex key");
  }
  out.resize(len);
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string out(bytes.size() * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), bytes.data(), bytes.size());
  out.pop_back();
  return out;
}

}  // namespace

HashCost HashCost::interactive() {
  return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

HashCost HashCost::minimum() {
  return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN};
}

std::string hash_password(std::string_view password, HashCost cost) {
  ensure_sodium();
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str_alg(out, password.data(), password.size(), cost.ops_limit,
                            cost.mem_limit, crypto_pwhash_ALG_ARGON2ID13) != 0) {
    throw std::runtime_error("password hashing failed");
  }
  return std::string(out);
}

bool verify_password(std::string_view encoded_hash, std::string_view password) {
  ensure_sodium();
  std::string hash(encoded_hash);
  return crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
}

void CredentialStore::add(Principal principal) {
  if (principal.id.empty()) throw std::invalid_argument("principal id must not be empty");
  if (principal.has_role(Role::kDevice) && !principal.device_id) {
    throw std::invalid_argument("device principal " + principal.id + " has no device binding");
  }
  auto id = principal.id;
  if (!principals_.emplace(id, std::move(principal)).second) {
    throw std::invalid_argument("duplicate principal id: " + id);
  }
}

void CredentialStore::add_psk(std::string key_id, std::vector<std::uint8_t> key) {
  psks_.insert_or_assign(std::move(key_id), std::move(key));
}

const Principal* CredentialStore::find(std::string_view id) const {
  auto it = principals_.find(id);
  return it == principals_.end() ? nullptr : &it->second;
}

std::optional<Principal> CredentialStore::authenticate_password(std::string_view id,
                                                                std::string_view password) const {
  const Principal* p = find(id);
  if (!p) return std::nullopt;
  const auto* cred = std::get_if<PasswordCredential>(&p->credential);
  if (!cred || !verify_password(cred->hash, password)) return std::nullopt;
  return *p;
}

std::optional<Principal> CredentialStore::authenticate_psk(std::string_view id,
                                                           std::span<const std::uint8_t> key) const {
  ensure_sodium();
  const Principal* p = find(id);
  if (!p) return std::nullopt;
  const auto* cred = std::get_if<PskCredential>(&p->credential);
  if (!cred) return std::nullopt;
  auto it = psks_.find(cred->key_id);
  if (it == psks_.end() || it->second.size() != key.size()) return std::nullopt;
  if (sodium_memcmp(it->second.data(), key.data(), key.size()) != 0) return std::nullopt;
  return *p;
}

CredentialStore CredentialStore::from_json(const nlohmann::json& j) {
  CredentialStore store;
  for (const auto& entry : j.value("principals", nlohmann::json::array())) {
    Principal p;
    p.id = entry.at("id").get<std::string>();
    for (const auto& r : entry.value("roles", nlohmann::json::array())) {
      auto role = role_from_string(r.get<std::string>());
      if (!role) throw std::invalid_argument("unknown role: " + r.dump());
      p.roles.insert(*role);
    }
    if (entry.contains("device")) p.device_id = entry["device"].get<std::string>();
    if (entry.contains("password_hash")) {
      p.credential = PasswordCredential{entry["password_hash"].get<std::string>()};
    } else if (entry.contains("psk_id")) {
      p.credential = PskCredential{entry["psk_id"].get<std::string>()};
    }
    store.add(std::move(p));
  }
  for (const auto& entry : j.value("psks", nlohmann::json::array())) {
    store.add_psk(entry.at("id").get<std::string>(),
                  from_hex(entry.at("key_hex").get<std::string>()));
  }
  return store;
}

nlohmann::json CredentialStore::to_json() const {
  nlohmann::json principals = nlohmann::json::array();
  for (const auto& [id, p] : principals_) {
    nlohmann::json entry{{"id", id}};
    nlohmann::json roles = nlohmann::json::array();
    for (Role r : p.roles) roles.push_back(twinmesh::to_string(r));
    entry["roles"] = std::move(roles);
    if (p.device_id) entry["device"] = *p.device_id;
    if (const auto* pw = std::get_if<PasswordCredential>(&p.credential)) {
      entry["password_hash"] = pw->hash;
    } else if (const auto* psk = std::get_if<PskCredential>(&p.credential)) {
      entry["psk_id"] = psk->key_id;
    }
    principals.push_back(std::move(entry));
  }
  nlohmann::json psks = nlohmann::json::array();
  for (const auto& [id, key] : psks_) psks.push_back({{"id", id}, {"key_hex", to_hex(key)}});
  return {{"principals", std::move(principals)}, {"psks", std::move(psks)}};
}

}  // namespace twinmesh
