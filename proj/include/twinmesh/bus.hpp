// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "twinmesh/access.hpp"
#include "twinmesh/wire.hpp"

namespace twinmesh {

using SubscriptionId = std::uint64_t;

struct Delivery {
  const WireMessage& message;
  const Principal& sender;
  int attempt;  // 1 on first delivery
};

/// Subscriber callback. Returning false leaves a QoS 1 message
/// unacknowledged and it is redelivered on a later poll. Callbacks must not
/// block; hand work to the owning actor.
using MessageHandler = std::function<bool(const Delivery&)>;

struct PublishResult {
  bool accepted = false;
  std::string reason;
  explicit operator bool() const { return accepted; }
};

struct SubscribeResult {
  bool accepted = false;
  SubscriptionId id = 0;
  std::string reason;
  explicit operator bool() const { return accepted; }
};

struct AuditRecord {
  std::uint64_t sequence;
  std::string principal;
  std::string operation;  // publish | subscribe | deliver | drop
  std::string topic;
  std::string reason;
};

/// Publish/subscribe contract shared by the in-process bus and broker
/// adapters. Authorization runs on every publish, every subscription and
/// every delivery.
class MessageBus {
 public:
  virtual ~MessageBus() = default;

  virtual PublishResult publish(const Principal& principal, WireMessage message) = 0;
  virtual SubscribeResult subscribe(const Principal& principal, std::string filter,
                                    MessageHandler handler, int qos = 1) = 0;
  virtual void unsubscribe(SubscriptionId id) = 0;
};

/// Deterministic single-dispatcher bus. Publishes are queued; poll()
/// delivers them in publish order, so per-topic FIFO holds. Nothing is
/// delivered until the owner pumps the bus.
class InProcessBus final : public MessageBus {
 public:
  struct Options {
    // Attempts after which an unacknowledged QoS 1 message is dropped and
    // audited.
    int max_delivery_attempts = 8;
    bool validate_payloads = true;
  };

  explicit InProcessBus(std::shared_ptr<const AccessController> access);
  InProcessBus(std::shared_ptr<const AccessController> access, Options options);

  PublishResult publish(const Principal& principal, WireMessage message) override;
  SubscribeResult subscribe(const Principal& principal, std::string filter,
                            MessageHandler handler, int qos = 1) override;
  void unsubscribe(SubscriptionId id) override;

  /// Delivers every message queued before the call plus pending
  /// redeliveries. Returns the number of handler invocations.
  std::size_t poll();

  /// Polls until nothing is queued or `max_rounds` is reached. Returns total
  /// handler invocations.
  std::size_t run_until_idle(std::size_t max_rounds = 1'000'000);

  bool idle() const;
  std::size_t queued() const;
  std::vector<AuditRecord> audit_log() const;

 private:
  struct Subscription {
    SubscriptionId id;
    Principal principal;
    std::string filter;
    MessageHandler handler;
    int qos;
  };
  struct Queued {
    WireMessage message;
    std::shared_ptr<const Principal> sender;
  };
  struct Redelivery {
    SubscriptionId subscription;
    Queued item;
    int attempts;
  };

  void audit(const Principal& principal, std::string operation, std::string topic,
             std::string reason);
  bool deliver(const std::shared_ptr<Subscription>& sub, const Queued& item, int attempt,
               std::size_t& invocations);

  std::shared_ptr<const AccessController> access_;
  Options options_;

  mutable std::mutex mu_;
  std::deque<Queued> queue_;
  std::deque<Redelivery> redeliveries_;
  std::map<SubscriptionId, std::shared_ptr<Subscription>> subscriptions_;
  std::vector<AuditRecord> audit_;
  SubscriptionId next_id_ = 1;
  std::uint64_t audit_seq_ = 0;
};

}  // namespace twinmesh
