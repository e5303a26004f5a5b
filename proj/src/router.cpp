// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/router.hpp"

#include <algorithm>
#include <stdexcept>

namespace twinmesh {
namespace {

void add_pair(SubDocumentMap& out, const std::string& key, const TaggedValue& value,
              std::uint64_t source_version) {
  for (const auto& tag : value.tags) {
    auto it = out.find(tag);
    if (it == out.end()) {
      it = out.emplace(tag, SubDocument{tag, {}, source_version}).first;
    }
    it->second.pairs.emplace(key, value);
  }
}

// Keys an active twin holds that the message moved out of it.
void collect_retractions(const ReportedUpdate& message, const std::string& tag,
                         const TwinEntry& twin, ReportedUpdate& update) {
  const auto& held = twin.shadow.reported;
  if (held.empty()) return;
  for (const auto& [key, entry] : message) {
    if (entry && entry->has_tag(tag)) continue;
    if (held.contains(key)) update.emplace(key, std::nullopt);
  }
}

}  // namespace

SubDocumentMap parse_tags(const ReportedMap& reported, std::uint64_t source_version) {
  SubDocumentMap out;
  for (const auto& [key, value] : reported) add_pair(out, key, value, source_version);
  return out;
}

SubDocumentMap parse_tags(const ReportedUpdate& message, std::uint64_t source_version) {
  SubDocumentMap out;
  for (const auto& [key, entry] : message) {
    if (entry) add_pair(out, key, *entry, source_version);
  }
  return out;
}

const TwinEntry* TwinRegistry::find(std::string_view tag) const {
  auto it = entries_.find(tag);
  return it == entries_.end() ? nullptr : &it->second;
}

TwinEntry* TwinRegistry::find(std::string_view tag) {
  auto it = entries_.find(tag);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t TwinRegistry::active_count() const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const auto& e) {
    return e.second.state == TwinState::kActive;
  }));
}

TwinEntry* ensure_twin(TwinRegistry& registry, std::string_view tag, std::int64_t now_ms) {
  if (!is_valid_tag(tag)) throw std::invalid_argument("invalid tag: " + std::string(tag));
  if (auto* existing = registry.find(tag)) {
    existing->state = TwinState::kActive;
    existing->last_active_ms = now_ms;
    return existing;
  }
  if (registry.entries_.size() >= registry.max_twins_) return nullptr;
  TwinEntry entry;
  entry.last_active_ms = now_ms;
  return &registry.entries_.emplace(std::string(tag), std::move(entry)).first->second;
}

std::vector<ShadowEvent> route(const SubDocumentMap& subdocs, TwinRegistry& registry,
                               const RouteContext& ctx) {
  std::vector<ShadowEvent> events;
  auto apply = [&](const std::string& tag, TwinEntry& twin, const ReportedUpdate& update) {
    MutationContext mctx{ShadowId{registry.device_id(), tag}, ctx.now_ms, std::nullopt, false};
    auto twin_events = apply_reported_in_place(twin.shadow, update, mctx);
    for (auto& ev : twin_events) {
      if (ev.kind == EventKind::kDocumentsChanged || ev.kind == EventKind::kRejected) {
        events.push_back(std::move(ev));
      }
    }
    twin.last_active_ms = ctx.now_ms;
  };

  for (const auto& [tag, sub] : subdocs) {
    TwinEntry* twin = ensure_twin(registry, tag, ctx.now_ms);
    if (!twin) {
      events.push_back({EventKind::kRejected,
                        ShadowId{registry.device_id(), tag},
                        {{"code", 503}, {"message", "twin capacity exhausted for tag " + tag}}});
      continue;
    }
    ReportedUpdate update;
    for (const auto& [key, value] : sub.pairs) update.emplace_hint(update.end(), key, value);
    if (ctx.message) collect_retractions(*ctx.message, tag, *twin, update);
    apply(tag, *twin, update);
  }

  if (ctx.message) {
    for (auto& [tag, twin] : registry.entries_) {
      if (subdocs.contains(tag) || twin.state != TwinState::kActive) continue;
      ReportedUpdate update;
      collect_retractions(*ctx.message, tag, twin, update);
      if (!update.empty()) apply(tag, twin, update);
    }
  }
  return events;
}

std::size_t reap_idle(TwinRegistry& registry, std::int64_t now_ms,
                      std::int64_t idle_threshold_ms) {
  if (idle_threshold_ms <= 0) throw std::invalid_argument("idle threshold must be positive");
  std::size_t reaped = 0;
  for (auto& [tag, twin] : registry.entries_) {
    if (twin.state == TwinState::kActive && now_ms - twin.last_active_ms > idle_threshold_ms) {
      twin.state = TwinState::kDormant;
      ++reaped;
    }
  }
  return reaped;
}

ForwardResult forward_desired(TwinRegistry& registry, std::string_view tag,
                              const DesiredUpdate& update, std::int64_t now_ms) {
  TwinEntry* twin = registry.find(tag);
  if (!twin) return {false, "no twin for tag " + std::string(tag), {}};
  for (const auto& [key, value] : update) {
    if (!twin->shadow.reported.contains(key)) {
      return {false, "key " + key + " is not held by tag shadow " + std::string(tag), {}};
    }
  }
  twin->state = TwinState::kActive;
  twin->last_active_ms = now_ms;
  for (const auto& [key, value] : update) {
    if (value) {
      twin->forwarded_desired.insert_or_assign(key, *value);
    } else {
      twin->forwarded_desired.erase(key);
    }
  }
  return {true, {}, update};
}

}  // namespace twinmesh
