// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/device.hpp"

#include <algorithm>
#include <stdexcept>

#include "twinmesh/service.hpp"
#include "twinmesh/topic.hpp"
#include "twinmesh/wire.hpp"

namespace twinmesh {

SimulatedDevice::SimulatedDevice(MessageBus& bus, Principal principal,
                                 std::function<std::int64_t()> clock)
    : bus_(bus), principal_(std::move(principal)), clock_(std::move(clock)) {
  if (!principal_.device_id) {
    throw std::invalid_argument("device principal " + principal_.id + " has no device binding");
  }
  device_id_ = *principal_.device_id;
  if (!clock_) clock_ = wall_clock_ms;
}

SimulatedDevice::~SimulatedDevice() {
  if (subscription_) bus_.unsubscribe(*subscription_);
}

void SimulatedDevice::configure_sensor(SensorConfig config) {
  if (!is_valid_key(config.key)) throw std::invalid_argument("invalid sensor key: " + config.key);
  auto key = config.key;
  sensors_.insert_or_assign(std::move(key), std::move(config));
}

bool SimulatedDevice::connect() {
  if (subscription_) return true;
  auto topic = topic_for(device_id_, std::nullopt, Channel::kUpdateDelta);
  auto result = bus_.subscribe(principal_, topic, [this](const Delivery& d) {
    ScalarMap delta;
    try {
      delta = decode_delta(d.message.payload);
    } catch (const SchemaViolation& e) {
      diagnostics_.push_back(std::string("bad delta: ") + e.what());
      return true;
    }
    on_delta_conform(delta);
    return true;
  });
  if (!result) return false;
  subscription_ = result.id;
  return true;
}

ReportedUpdate SimulatedDevice::on_delta_conform(const ScalarMap& delta) {
  ReportedUpdate report;
  if (delta.empty()) return report;
  std::int64_t latency = 0;
  for (const auto& [key, value] : delta) {
    auto it = sensors_.find(key);
    if (it == sensors_.end()) {
      diagnostics_.push_back("delta for unknown key " + key + " adopted without tags");
      it = sensors_.emplace(key, SensorConfig{key, value, {}, 0}).first;
    }
    it->second.value = value;
    latency = std::max(latency, it->second.conform_latency_ms);
    report.emplace_hint(report.end(), key, TaggedValue{value, it->second.device_tags});
  }
  if (latency <= 0) {
    publish_report(report);
  } else {
    pending_.push_back({clock_() + latency, report});
  }
  return report;
}

ReportedUpdate SimulatedDevice::emit_reported() {
  ReportedUpdate report;
  for (const auto& [key, sensor] : sensors_) {
    report.emplace_hint(report.end(), key, TaggedValue{sensor.value, sensor.device_tags});
  }
  publish_report(report);
  return report;
}

void SimulatedDevice::tick() {
  const std::int64_t now = clock_();
  std::vector<Pending> due;
  std::erase_if(pending_, [&](Pending& p) {
    if (p.due_ms > now) return false;
    due.push_back(std::move(p));
    return true;
  });
  for (const auto& p : due) publish_report(p.report);
}

void SimulatedDevice::publish_report(const ReportedUpdate& report) {
  UpdateRequest request;
  request.reported = report;
  bus_.publish(principal_, WireMessage{topic_for(device_id_, std::nullopt, Channel::kUpdate),
                                       encode_update(request), qos_, {}});
  ++published_;
}

DeviceConfig device_config_from_json(const nlohmann::json& j) {
  DeviceConfig config;
  config.id = j.at("id").get<std::string>();
  if (!is_valid_device_id(config.id)) throw std::invalid_argument("invalid device id: " + config.id);
  std::vector<std::string> seen;
  for (const auto& s : j.value("sensors", nlohmann::json::array())) {
    SensorConfig sensor;
    sensor.key = s.at("key").get<std::string>();
    if (!is_valid_key(sensor.key)) throw std::invalid_argument("invalid sensor key: " + sensor.key);
    if (std::find(seen.begin(), seen.end(), sensor.key) != seen.end()) {
      throw std::invalid_argument("duplicate sensor key: " + sensor.key);
    }
    seen.push_back(sensor.key);
    sensor.value = scalar_from_json(s.at("value"));
    sensor.device_tags = s.value("tags", std::vector<std::string>{});
    sensor.conform_latency_ms = s.value("latency_ms", std::int64_t{0});
    config.sensors.push_back(std::move(sensor));
  }
  if (j.contains("rules")) config.rules = j["rules"];
  return config;
}

}  // namespace twinmesh
