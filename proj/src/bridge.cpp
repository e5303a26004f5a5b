// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/bridge.hpp"

namespace twinmesh {

MqttBridge::MqttBridge(InProcessBus& bus, MqttClientPort& client, Principal bridge_principal,
                       const CredentialStore& credentials)
    : bus_(bus), client_(client), principal_(std::move(bridge_principal)),
      credentials_(credentials) {
  client_.set_inbound_handler(
      [this](const std::string& topic, const std::string& payload, int qos,
             const std::string& username) { on_inbound(topic, payload, qos, username); });
}

MqttBridge::~MqttBridge() {
  client_.set_inbound_handler(nullptr);
  for (auto id : subscriptions_) bus_.unsubscribe(id);
}

bool MqttBridge::export_filter(const std::string& filter, int qos) {
  auto result = bus_.subscribe(
      principal_, filter,
      [this](const Delivery& d) {
        if (d.message.origin == principal_.id) return true;
        if (!client_.publish(d.message.topic, d.message.payload, d.message.qos)) return false;
        ++exported_;
        return true;
      },
      qos);
  if (!result) return false;
  subscriptions_.push_back(result.id);
  return true;
}

bool MqttBridge::import_filter(const std::string& filter, int qos) {
  return client_.subscribe(filter, qos);
}

void MqttBridge::on_inbound(const std::string& topic, const std::string& payload, int qos,
                            const std::string& username) {
  const Principal* sender = credentials_.find(username);
  if (!sender) {
    ++rejected_;
    return;
  }
  if (bus_.publish(*sender, WireMessage{topic, payload, qos, principal_.id})) {
    ++imported_;
  } else {
    ++rejected_;
  }
}

bool BrokerAuthPlugin::basic_auth(std::string_view username, std::string_view password) const {
  return credentials_.authenticate_password(username, password).has_value();
}

bool BrokerAuthPlugin::psk_auth(std::string_view identity,
                                std::span<const std::uint8_t> key) const {
  return credentials_.authenticate_psk(identity, key).has_value();
}

bool BrokerAuthPlugin::acl_check(std::string_view username, std::string_view topic,
                                 Access access) const {
  const Principal* principal = credentials_.find(username);
  if (!principal) return false;
  if (access == Access::kWrite) {
    auto parsed = try_parse_topic(topic);
    if (!parsed) return static_cast<bool>(access_.authorize(*principal, Action::kWrite, topic));
    return static_cast<bool>(access_.authorize(*principal, publish_action(*parsed), *parsed));
  }
  // Wildcard subscriptions are admitted here and filtered per message on
  // kRead, matching the in-process bus.
  if (access == Access::kSubscribe && filter_has_wildcards(topic)) return is_valid_filter(topic);
  return static_cast<bool>(access_.authorize(*principal, Action::kRead, topic));
}

}  // namespace twinmesh
