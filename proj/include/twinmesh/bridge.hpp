// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twinmesh/access.hpp"
#include "twinmesh/bus.hpp"
#include "twinmesh/credentials.hpp"

namespace twinmesh {

/// The slice of an MQTT 5.0 client the bridge drives. Adapt any client
/// library to this; `username` on inbound messages is the authenticated
/// publisher as reported by the broker (e.g. an MQTT 5 user property).
class MqttClientPort {
 public:
  using InboundHandler = std::function<void(const std::string& topic, const std::string& payload,
                                            int qos, const std::string& username)>;

  virtual ~MqttClientPort() = default;
  virtual bool publish(const std::string& topic, const std::string& payload, int qos) = 0;
  virtual bool subscribe(const std::string& filter, int qos) = 0;
  virtual void set_inbound_handler(InboundHandler handler) = 0;
};

/// Relays between the in-process bus and an external broker.
///
/// Exported filters are subscribed on the bus as the bridge principal and
/// forwarded to the broker. Imported filters are subscribed on the broker;
/// each inbound message re-enters the bus as the principal named by its
/// username, so bus authorization still applies. Messages the bridge itself
/// injected are not exported again.
class MqttBridge {
 public:
  MqttBridge(InProcessBus& bus, MqttClientPort& client, Principal bridge_principal,
             const CredentialStore& credentials);
  ~MqttBridge();

  MqttBridge(const MqttBridge&) = delete;
  MqttBridge& operator=(const MqttBridge&) = delete;

  bool export_filter(const std::string& filter, int qos = 1);
  bool import_filter(const std::string& filter, int qos = 1);

  std::uint64_t exported() const { return exported_; }
  std::uint64_t imported() const { return imported_; }
  std::uint64_t rejected() const { return rejected_; }

 private:
  void on_inbound(const std::string& topic, const std::string& payload, int qos,
                  const std::string& username);

  InProcessBus& bus_;
  MqttClientPort& client_;
  Principal principal_;
  const CredentialStore& credentials_;
  std::vector<SubscriptionId> subscriptions_;
  std::uint64_t exported_ = 0;
  std::uint64_t imported_ = 0;
  std::uint64_t rejected_ = 0;
};

/// Mosquitto-style authentication/ACL plugin surface backed by the same
/// evaluator as the in-process bus.
class BrokerAuthPlugin {
 public:
  enum class Access { kRead, kWrite, kSubscribe };

  BrokerAuthPlugin(const CredentialStore& credentials, const AccessController& access)
      : credentials_(credentials), access_(access) {}

  bool basic_auth(std::string_view username, std::string_view password) const;
  bool psk_auth(std::string_view identity, std::span<const std::uint8_t> key) const;
  /// Unknown users are denied.
  bool acl_check(std::string_view username, std::string_view topic, Access access) const;

 private:
  const CredentialStore& credentials_;
  const AccessController& access_;
};

}  // namespace twinmesh
