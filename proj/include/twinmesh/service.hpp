// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twinmesh/access.hpp"
#include "twinmesh/bus.hpp"
#include "twinmesh/router.hpp"
#include "twinmesh/shadow.hpp"
#include "twinmesh/tags.hpp"

namespace twinmesh {

/// Unix milliseconds from the system clock.
std::int64_t wall_clock_ms();

struct ServiceOptions {
  std::int64_t idle_threshold_ms = 60'000;
  std::size_t max_twins_per_device = TwinRegistry::kDefaultMaxTwins;
  std::function<std::int64_t()> clock = wall_clock_ms;
  // QoS of everything the service publishes.
  int qos = 1;
};

/// Timing of one reported message, covering update, delta and parse_tags
/// (decode through publication of the sub-documents).
struct ProcessingSample {
  std::string device;
  std::size_t pair_count = 0;        // pairs in the base shadow afterwards
  std::size_t tag_attachments = 0;   // sum of tag counts over those pairs
  std::chrono::nanoseconds elapsed{0};
};

/// Edge shadow service: owns every device's base shadow and tag shadows and
/// serves the shadow topic API on a bus.
///
/// Reported updates on a base `update` channel get rule and admin tags,
/// are merged into the base shadow, and are split into tag shadows. Desired
/// updates may arrive on the base or on a tag shadow (for keys that twin
/// holds); either way the base shadow computes the delta. All handling
/// runs on the bus dispatcher, one message at a time.
class ShadowService {
 public:
  ShadowService(MessageBus& bus, std::shared_ptr<AccessController> access,
                ServiceOptions options = {});
  ~ShadowService();

  ShadowService(const ShadowService&) = delete;
  ShadowService& operator=(const ShadowService&) = delete;

  /// Subscribes to the request channels of every device.
  void start();

  const Principal& principal() const { return principal_; }

  RuleBook& rules() { return rules_; }
  AdminTagStore& admin_tags() { return admin_tags_; }

  void set_processing_observer(std::function<void(const ProcessingSample&)> observer);

  /// Entry point for one delivered request; also usable without a bus.
  void handle(const WireMessage& message, const Principal& sender);

  std::optional<ShadowDocument> base_document(std::string_view device) const;
  /// Copy of the device's twin registry, if the device is known.
  std::optional<TwinRegistry> twins(std::string_view device) const;
  std::vector<std::string> devices() const;

  /// Tag-rule diagnostics collected at ingest (most recent last).
  std::vector<RuleDiagnostic> diagnostics() const;

  /// Reaps idle twins on every device. Returns how many went dormant.
  std::size_t reap_idle_twins();

  /// Forgets all state of one device, or of all devices.
  void reset(std::string_view device);
  void reset_all();

 private:
  struct DeviceState {
    explicit DeviceState(const std::string& id, std::size_t max_twins)
        : base(), twins(id, max_twins) {}
    ShadowDocument base;
    TwinRegistry twins;
  };

  DeviceState& state_for(const std::string& device);
  void publish(const Topic& topic, std::string payload);
  void publish_base_events(const Topic& request, const std::vector<ShadowEvent>& events,
                           const DeviceState& state, const std::optional<std::string>& token);
  void handle_base_update(const Topic& topic, std::string_view payload);
  void handle_named_update(const Topic& topic, std::string_view payload);
  void handle_get(const Topic& topic, std::string_view payload);
  void handle_admin(const Topic& topic, std::string_view payload, const Principal& sender);
  void reject(const Topic& topic, int code, const std::string& message,
              const std::optional<std::string>& token = std::nullopt);

  MessageBus& bus_;
  std::shared_ptr<AccessController> access_;
  ServiceOptions options_;
  Principal principal_;
  RuleBook rules_;
  AdminTagStore admin_tags_;
  std::vector<SubscriptionId> subscriptions_;

  mutable std::mutex mu_;
  std::map<std::string, DeviceState, std::less<>> devices_;
  std::vector<RuleDiagnostic> diagnostics_;
  std::function<void(const ProcessingSample&)> observer_;
};

}  // namespace twinmesh
