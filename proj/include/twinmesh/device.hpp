// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinmesh/access.hpp"
#include "twinmesh/bus.hpp"
#include "twinmesh/shadow.hpp"

namespace twinmesh {

struct SensorConfig {
  std::string key;
  Scalar value;
  std::vector<std::string> device_tags;
  std::int64_t conform_latency_ms = 0;
};

/// In-process stand-in for a physical device: follows its base shadow's
/// delta channel and reports state with its own tags attached.
class SimulatedDevice {
 public:
  SimulatedDevice(MessageBus& bus, Principal principal,
                  std::function<std::int64_t()> clock = nullptr);
  ~SimulatedDevice();

  SimulatedDevice(const SimulatedDevice&) = delete;
  SimulatedDevice& operator=(const SimulatedDevice&) = delete;

  const std::string& device_id() const { return device_id_; }

  /// Adds or replaces a sensor; the next report reflects it.
  void configure_sensor(SensorConfig config);
  const std::map<std::string, SensorConfig, std::less<>>& sensors() const { return sensors_; }

  /// Subscribes to the base delta channel. Returns false if the bus refused.
  bool connect();
  bool connected() const { return subscription_.has_value(); }

  /// Adopts the delta values and reports them (after the longest configured
  /// latency among the touched keys). Unknown keys become sensors with no
  /// device tags and leave a diagnostic. Returns the report; empty for an
  /// empty delta, which publishes nothing.
  ReportedUpdate on_delta_conform(const ScalarMap& delta);

  /// Publishes the full current state on the base `update` channel.
  ReportedUpdate emit_reported();

  /// Publishes reports whose latency has elapsed.
  void tick();

  /// QoS of the device's reports (1 unless changed).
  void set_qos(int qos) { qos_ = qos; }

  std::size_t pending_reports() const { return pending_.size(); }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  std::uint64_t published() const { return published_; }

 private:
  struct Pending {
    std::int64_t due_ms;
    ReportedUpdate report;
  };

  void publish_report(const ReportedUpdate& report);

  MessageBus& bus_;
  Principal principal_;
  std::string device_id_;
  std::function<std::int64_t()> clock_;
  std::map<std::string, SensorConfig, std::less<>> sensors_;
  std::optional<SubscriptionId> subscription_;
  std::vector<Pending> pending_;
  std::vector<std::string> diagnostics_;
  std::uint64_t published_ = 0;
  int qos_ = 1;
};

// Device config file:
//   {"id":"car1","sensors":[{"key":"speed","value":60,"tags":["motion"],"latency_ms":0}],
//    "rules":[...threshold rules, see rules_from_json...]}
struct DeviceConfig {
  std::string id;
  std::vector<SensorConfig> sensors;
  nlohmann::json rules = nlohmann::json::array();
};

DeviceConfig device_config_from_json(const nlohmann::json& j);

}  // namespace twinmesh
