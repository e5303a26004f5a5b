// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinmesh/topic.hpp"

namespace twinmesh {

enum class Role { kAdmin, kDevice, kApp };
enum class Action { kRead, kWrite };

std::string_view to_string(Role role);
std::string_view to_string(Action action);
std::optional<Role> role_from_string(std::string_view s);
std::optional<Action> action_from_string(std::string_view s);

/// Argon2id encoded hash string (salt embedded).
struct PasswordCredential {
  std::string hash;
};
/// Id of an entry in the PSK store.
struct PskCredential {
  std::string key_id;
};
using Credential = std::variant<std::monostate, PasswordCredential, PskCredential>;

struct Principal {
  std::string id;
  Credential credential;
  std::set<Role> roles;
  // Set for device principals only; a device principal speaks for exactly
  // one device.
  std::optional<std::string> device_id;

  bool has_role(Role role) const { return roles.contains(role); }
};

/// Grant tag that addresses the base shadow rather than a tag shadow.
inline constexpr std::string_view kBaseGrantTag = "#base";

struct Grant {
  std::string principal;
  std::string device;  // glob over device ids
  std::string tag;     // glob over tag names, or "#base"
  Action action = Action::kRead;

  friend auto operator<=>(const Grant&, const Grant&) = default;
};

/// Deny-by-default grant set.
class AccessPolicy {
 public:
  AccessPolicy() = default;
  explicit AccessPolicy(std::set<Grant> grants) : grants_(std::move(grants)) {}

  const std::set<Grant>& grants() const { return grants_; }
  bool contains(const Grant& g) const { return grants_.contains(g); }

  /// True if any grant for `principal_id` covers (device, shadow, action).
  bool permits(std::string_view principal_id, std::string_view device,
               const std::optional<std::string>& shadow_name, Action action) const;

  friend bool operator==(const AccessPolicy&, const AccessPolicy&) = default;

 private:
  std::set<Grant> grants_;
};

struct Decision {
  bool allowed = false;
  std::string reason;

  static Decision allow() { return {true, {}}; }
  static Decision deny(std::string why) { return {false, std::move(why)}; }
  explicit operator bool() const { return allowed; }
};

/// Topic-level authorization. Pure; safe to call concurrently.
///
/// Admins may do anything. Device principals may always publish on their
/// own base `update`/`get` and read their own base responses (delta,
/// accepted, rejected). The admin channel (`tags/push`) needs the admin role
/// whatever the grants say, and response channels are written only by
/// admins (the shadow service). Everything else needs a matching grant.
Decision authorize(const AccessPolicy& policy, const Principal& principal, Action action,
                   const Topic& topic);
Decision authorize(const AccessPolicy& policy, const Principal& principal, Action action,
                   std::string_view topic);

/// Action the broker checks when `topic` is published to.
Action publish_action(const Topic& topic);

class Unauthorized : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Both throw Unauthorized unless `actor` is an admin. Revoking a grant
/// that is not present returns the policy unchanged.
AccessPolicy grant(const AccessPolicy& policy, const Principal& actor, Grant entry);
AccessPolicy revoke(const AccessPolicy& policy, const Principal& actor, const Grant& entry);

/// MQTT filters equivalent to a grant, for exporting to an external broker
/// ACL. Device or tag globs containing wildcards become `+`, so the export
/// may be broader than the grant; the evaluator stays authoritative.
std::vector<std::string> compile_topic_filters(const Grant& grant);

// Policy file: {"grants":[{"principal":"app1","device":"car1","tag":"pressure","action":"read"}]}
AccessPolicy policy_from_json(const nlohmann::json& j);
nlohmann::json policy_to_json(const AccessPolicy& policy);

/// Current policy snapshot plus atomic swap on grant/revoke.
class AccessController {
 public:
  AccessController() : policy_(std::make_shared<const AccessPolicy>()) {}
  explicit AccessController(AccessPolicy policy)
      : policy_(std::make_shared<const AccessPolicy>(std::move(policy))) {}

  std::shared_ptr<const AccessPolicy> snapshot() const;

  Decision authorize(const Principal& principal, Action action, const Topic& topic) const;
  Decision authorize(const Principal& principal, Action action, std::string_view topic) const;

  void grant(const Principal& actor, Grant entry);
  void revoke(const Principal& actor, const Grant& entry);
  void replace(AccessPolicy policy);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const AccessPolicy> policy_;
};

}  // namespace twinmesh
