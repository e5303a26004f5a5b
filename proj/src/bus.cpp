// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/bus.hpp"

#include <algorithm>

namespace twinmesh {

InProcessBus::InProcessBus(std::shared_ptr<const AccessController> access)
    : InProcessBus(std::move(access), Options{}) {}

InProcessBus::InProcessBus(std::shared_ptr<const AccessController> access, Options options)
    : access_(std::move(access)), options_(options) {}

void InProcessBus::audit(const Principal& principal, std::string operation, std::string topic,
                         std::string reason) {
  std::lock_guard lock(mu_);
  audit_.push_back({++audit_seq_, principal.id, std::move(operation), std::move(topic),
                    std::move(reason)});
}

PublishResult InProcessBus::publish(const Principal& principal, WireMessage message) {
  if (options_.validate_payloads) {
    try {
      validate_wire_message(message);
    } catch (const std::invalid_argument& e) {
      audit(principal, "publish", message.topic, e.what());
      return {false, e.what()};
    }
  }
  auto parsed = try_parse_topic(message.topic);
  Decision decision = parsed ? access_->authorize(principal, publish_action(*parsed), *parsed)
                             : access_->authorize(principal, Action::kWrite, message.topic);
  if (!decision) {
    audit(principal, "publish", message.topic, decision.reason);
    return {false, decision.reason};
  }
  std::lock_guard lock(mu_);
  queue_.push_back({std::move(message), std::make_shared<const Principal>(principal)});
  return {true, {}};
}

SubscribeResult InProcessBus::subscribe(const Principal& principal, std::string filter,
                                        MessageHandler handler, int qos) {
  if (!is_valid_filter(filter)) {
    audit(principal, "subscribe", filter, "invalid topic filter");
    return {false, 0, "invalid topic filter"};
  }
  // Wildcard filters are checked per delivery; concrete ones up front too.
  if (!filter_has_wildcards(filter)) {
    if (auto d = access_->authorize(principal, Action::kRead, filter); !d) {
      audit(principal, "subscribe", filter, d.reason);
      return {false, 0, d.reason};
    }
  }
  std::lock_guard lock(mu_);
  SubscriptionId id = next_id_++;
  subscriptions_.emplace(id, std::make_shared<Subscription>(Subscription{
                                 id, principal, std::move(filter), std::move(handler),
                                 std::clamp(qos, 0, 1)}));
  return {true, id, {}};
}

void InProcessBus::unsubscribe(SubscriptionId id) {
  std::lock_guard lock(mu_);
  subscriptions_.erase(id);
  std::erase_if(redeliveries_, [id](const Redelivery& r) { return r.subscription == id; });
}

bool InProcessBus::deliver(const std::shared_ptr<Subscription>& sub, const Queued& item,
                           int attempt, std::size_t& invocations) {
  // Re-evaluated on every delivery so revocation applies to in-flight
  // messages and wildcard subscriptions.
  if (auto d = access_->authorize(sub->principal, Action::kRead, item.message.topic); !d) {
    audit(sub->principal, "deliver", item.message.topic, d.reason);
    return true;
  }
  ++invocations;
  bool acked = sub->handler(Delivery{item.message, *item.sender, attempt});
  int qos = std::min(sub->qos, item.message.qos);
  if (acked || qos == 0) return true;
  if (attempt >= options_.max_delivery_attempts) {
    audit(sub->principal, "drop", item.message.topic, "unacknowledged after max attempts");
    return true;
  }
  std::lock_guard lock(mu_);
  redeliveries_.push_back({sub->id, item, attempt + 1});
  return false;
}

std::size_t InProcessBus::poll() {
  std::deque<Queued> batch;
  std::deque<Redelivery> retries;
  {
    std::lock_guard lock(mu_);
    batch.swap(queue_);
    retries.swap(redeliveries_);
  }
  std::size_t invocations = 0;

  for (auto& retry : retries) {
    std::shared_ptr<Subscription> sub;
    {
      std::lock_guard lock(mu_);
      auto it = subscriptions_.find(retry.subscription);
      if (it != subscriptions_.end()) sub = it->second;
    }
    if (sub) deliver(sub, retry.item, retry.attempts, invocations);
  }

  for (const auto& item : batch) {
    std::vector<std::shared_ptr<Subscription>> targets;
    {
      std::lock_guard lock(mu_);
      for (const auto& [id, sub] : subscriptions_) {
        if (filter_matches(sub->filter, item.message.topic)) targets.push_back(sub);
      }
    }
    for (const auto& sub : targets) {
      bool still_subscribed;
      {
        std::lock_guard lock(mu_);
        still_subscribed = subscriptions_.contains(sub->id);
      }
      if (still_subscribed) deliver(sub, item, 1, invocations);
    }
  }
  return invocations;
}

std::size_t InProcessBus::run_until_idle(std::size_t max_rounds) {
  std::size_t total = 0;
  for (std::size_t round = 0; round < max_rounds && !idle(); ++round) total += poll();
  return total;
}

bool InProcessBus::idle() const {
  std::lock_guard lock(mu_);
  return queue_.empty() && redeliveries_.empty();
}

std::size_t InProcessBus::queued() const {
  std::lock_guard lock(mu_);
  return queue_.size() + redeliveries_.size();
}

std::vector<AuditRecord> InProcessBus::audit_log() const {
  std::lock_guard lock(mu_);
  return audit_;
}

}  // namespace twinmesh
