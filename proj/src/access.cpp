// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/access.hpp"

#include "twinmesh/glob.hpp"

namespace twinmesh {
namespace {

bool tag_grant_matches(std::string_view grant_tag, const std::optional<std::string>& shadow) {
  if (!shadow) return grant_tag == kBaseGrantTag;
  return grant_tag != kBaseGrantTag && glob_match(grant_tag, *shadow);
}

bool device_may_always(const Principal& principal, Action action, const Topic& topic) {
  if (!principal.has_role(Role::kDevice) || !principal.device_id ||
      *principal.device_id != topic.device || !topic.is_base()) {
    return false;
  }
  switch (topic.channel) {
    case Channel::kUpdate:
      return true;
    case Channel::kGet:
      return action == Action::kRead;
    case Channel::kUpdateDelta:
    case Channel::kUpdateAccepted:
    case Channel::kUpdateRejected:
    case Channel::kGetAccepted:
    case Channel::kGetRejected:
      return action == Action::kRead;
    default:
      return false;
  }
}

std::string glob_to_level(std::string_view glob) {
  return glob.find_first_of("*?") == std::string_view::npos ? std::string(glob) : "+";
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kAdmin: return "admin";
    case Role::kDevice: return "device";
    case Role::kApp: return "app";
  }
  return "unknown";
}

std::string_view to_string(Action action) {
  return action == Action::kRead ? "read" : "write";
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "admin") return Role::kAdmin;
  if (s == "device") return Role::kDevice;
  if (s == "app") return Role::kApp;
  return std::nullopt;
}

std::optional<Action> action_from_string(std::string_view s) {
  if (s == "read") return Action::kRead;
  if (s == "write") return Action::kWrite;
  return std::nullopt;
}

bool AccessPolicy::permits(std::string_view principal_id, std::string_view device,
                           const std::optional<std::string>& shadow_name,
                           Action action) const {
  // Grants are ordered by principal first, so only that principal's range
  // is scanned.
  auto it = grants_.lower_bound(Grant{std::string(principal_id), {}, {}, Action::kRead});
  for (; it != grants_.end() && it->principal == principal_id; ++it) {
    if (it->action == action && glob_match(it->device, device) &&
        tag_grant_matches(it->tag, shadow_name)) {
      return true;
    }
  }
  return false;
}

Action publish_action(const Topic& topic) {
  return topic.channel == Channel::kGet ? Action::kRead : Action::kWrite;
}

Decision authorize(const AccessPolicy& policy, const Principal& principal, Action action,
                   const Topic& topic) {
  if (principal.has_role(Role::kAdmin)) return Decision::allow();
  if (topic.channel == Channel::kTagsPush) {
    return Decision::deny("admin channel requires the admin role");
  }
  if (device_may_always(principal, action, topic)) return Decision::allow();
  if (action == Action::kWrite && is_response_channel(topic.channel)) {
    return Decision::deny("response channels are published by the shadow service only");
  }
  if (policy.permits(principal.id, topic.device, topic.shadow_name, action)) {
    return Decision::allow();
  }
  return Decision::deny("no grant for " + principal.id + " to " +
                        std::string(to_string(action)) + " " +
                        (topic.shadow_name ? *topic.shadow_name : std::string(kBaseGrantTag)) +
                        " on " + topic.device);
}

Decision authorize(const AccessPolicy& policy, const Principal& principal, Action action,
                   std::string_view topic) {
  auto parsed = try_parse_topic(topic);
  if (!parsed) return Decision::deny("unparsable topic: " + std::string(topic));
  return authorize(policy, principal, action, *parsed);
}

AccessPolicy grant(const AccessPolicy& policy, const Principal& actor, Grant entry) {
  if (!actor.has_role(Role::kAdmin)) throw Unauthorized("grant requires the admin role");
  auto grants = policy.grants();
  grants.insert(std::move(entry));
  return AccessPolicy(std::move(grants));
}

AccessPolicy revoke(const AccessPolicy& policy, const Principal& actor, const Grant& entry) {
  if (!actor.has_role(Role::kAdmin)) throw Unauthorized("revoke requires the admin role");
  if (!policy.contains(entry)) return policy;
  auto grants = policy.grants();
  grants.erase(entry);
  return AccessPolicy(std::move(grants));
}

std::vector<std::string> compile_topic_filters(const Grant& grant) {
  std::string prefix = "things/" + glob_to_level(grant.device) + "/shadow/";
  std::vector<std::string> out;
  bool base = grant.tag == kBaseGrantTag;
  std::string shadow = base ? prefix : prefix + "name/" + glob_to_level(grant.tag) + "/";
  if (grant.action == Action::kRead) {
    out.push_back(shadow + "#");
  } else {
    out.push_back(shadow + "update");
  }
  return out;
}

AccessPolicy policy_from_json(const nlohmann::json& j) {
  std::set<Grant> grants;
  for (const auto& g : j.at("grants")) {
    auto action = action_from_string(g.at("action").get<std::string>());
    if (!action) throw std::invalid_argument("unknown action: " + g.at("action").dump());
    grants.insert(Grant{g.at("principal").get<std::string>(), g.value("device", "*"),
                        g.at("tag").get<std::string>(), *action});
  }
  return AccessPolicy(std::move(grants));
}

nlohmann::json policy_to_json(const AccessPolicy& policy) {
  nlohmann::json grants = nlohmann::json::array();
  for (const auto& g : policy.grants()) {
    grants.push_back({{"principal", g.principal},
                      {"device", g.device},
                      {"tag", g.tag},
                      {"action", to_string(g.action)}});
  }
  return {{"grants", std::move(grants)}};
}

std::shared_ptr<const AccessPolicy> AccessController::snapshot() const {
  std::lock_guard lock(mu_);
  return policy_;
}

Decision AccessController::authorize(const Principal& principal, Action action,
                                     const Topic& topic) const {
  return twinmesh::authorize(*snapshot(), principal, action, topic);
}

Decision AccessController::authorize(const Principal& principal, Action action,
                                     std::string_view topic) const {
  return twinmesh::authorize(*snapshot(), principal, action, topic);
}

void AccessController::grant(const Principal& actor, Grant entry) {
  std::lock_guard lock(mu_);
  policy_ = std::make_shared<const AccessPolicy>(twinmesh::grant(*policy_, actor, std::move(entry)));
}

void AccessController::revoke(const Principal& actor, const Grant& entry) {
  std::lock_guard lock(mu_);
  policy_ = std::make_shared<const AccessPolicy>(twinmesh::revoke(*policy_, actor, entry));
}

void AccessController::replace(AccessPolicy policy) {
  std::lock_guard lock(mu_);
  policy_ = std::make_shared<const AccessPolicy>(std::move(policy));
}

}  // namespace twinmesh
