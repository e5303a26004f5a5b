// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/shadow.hpp"

#include <algorithm>
#include <cctype>

namespace twinmesh {
namespace {

bool is_tag_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '/' || c == '-';
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

nlohmann::json rejection_payload(const ShadowError& err) {
  int code = err.code == ShadowErrorCode::kVersionConflict ? 409 : 400;
  return {{"code", code}, {"message", err.message}};
}

std::vector<ShadowEvent> reject(const MutationContext& ctx, ShadowError err,
                                std::optional<ShadowError>* error_out) {
  std::vector<ShadowEvent> events;
  events.push_back({EventKind::kRejected, ctx.shadow, rejection_payload(err)});
  if (error_out) *error_out = std::move(err);
  return events;
}

std::optional<ShadowError> check_version(const ShadowDocument& doc,
                                         const MutationContext& ctx) {
  if (ctx.expected_version && *ctx.expected_version < doc.version) {
    return ShadowError{ShadowErrorCode::kVersionConflict,
                       "version conflict: expected " + std::to_string(*ctx.expected_version) +
                           ", current " + std::to_string(doc.version)};
  }
  return std::nullopt;
}

// Removes matched desired keys, returning what was resolved.
ScalarMap resolve_in_place(ShadowDocument& doc) {
  ScalarMap resolved;
  for (auto it = doc.desired.begin(); it != doc.desired.end();) {
    auto rep = doc.reported.find(it->first);
    if (rep != doc.reported.end() && rep->second.value == it->second) {
      doc.delta.erase(it->first);
      resolved.insert(doc.desired.extract(it++));
    } else {
      ++it;
    }
  }
  return resolved;
}

void finish_mutation(ShadowDocument& doc, const MutationContext& ctx,
                     nlohmann::json accepted_state, std::vector<std::string> changed_keys,
                     std::vector<ShadowEvent>& events) {
  ScalarMap resolved = resolve_in_place(doc);
  doc.delta = compute_delta(doc.reported, doc.desired);
  doc.version += 1;
  doc.timestamp_ms = ctx.now_ms;

  auto stamp = [&](nlohmann::json payload) {
    payload["version"] = doc.version;
    payload["timestamp"] = doc.timestamp_ms;
    return payload;
  };
  events.push_back({EventKind::kAccepted, ctx.shadow,
                    ctx.emit_fragment ? stamp({{"state", std::move(accepted_state)}})
                                      : stamp(nlohmann::json::object())});
  if (!resolved.empty()) {
    events.push_back({EventKind::kResolved, ctx.shadow,
                      stamp({{"state", {{"desired", to_json(resolved)}}}})});
  }
  if (!doc.delta.empty()) {
    events.push_back({EventKind::kDeltaPublished, ctx.shadow,
                      stamp({{"state", to_json(doc.delta)}})});
  }
  events.push_back({EventKind::kDocumentsChanged, ctx.shadow,
                    stamp({{"changed", std::move(changed_keys)}})});
}

}  // namespace

bool is_valid_tag(std::string_view tag) {
  return !tag.empty() && tag.size() <= 64 && std::all_of(tag.begin(), tag.end(), is_tag_char);
}

bool is_valid_key(std::string_view key) {
  return !key.empty() && key.size() <= 128 && std::all_of(key.begin(), key.end(), is_key_char);
}

std::optional<std::vector<std::string>> normalize_tags(std::span<const std::string> tags) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  for (const auto& raw : tags) {
    std::string tag = lowercase(raw);
    if (!is_valid_tag(tag)) return std::nullopt;
    if (std::find(out.begin(), out.end(), tag) == out.end()) out.push_back(std::move(tag));
  }
  return out;
}

bool TaggedValue::has_tag(std::string_view tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::string ShadowId::to_string() const {
  return tag ? device + "/" + *tag : device;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kAccepted: return "accepted";
    case EventKind::kRejected: return "rejected";
    case EventKind::kDeltaPublished: return "delta-published";
    case EventKind::kDocumentsChanged: return "documents-changed";
    case EventKind::kResolved: return "resolved";
  }
  return "unknown";
}

ScalarMap compute_delta(const ReportedMap& reported, const ScalarMap& desired) {
  ScalarMap delta;
  for (const auto& [key, want] : desired) {
    auto it = reported.find(key);
    if (it == reported.end() || !(it->second.value == want)) {
      delta.emplace_hint(delta.end(), key, want);
    }
  }
  return delta;
}

ShadowDocument resolve_matched(ShadowDocument doc) {
  resolve_in_place(doc);
  return doc;
}

std::vector<ShadowEvent> apply_reported_in_place(ShadowDocument& doc,
                                                 const ReportedUpdate& update,
                                                 const MutationContext& ctx,
                                                 std::optional<ShadowError>* error) {
  if (auto err = check_version(doc, ctx)) return reject(ctx, std::move(*err), error);

  // Validate everything before touching the document.
  std::vector<std::pair<const std::string*, std::optional<TaggedValue>>> staged;
  staged.reserve(update.size());
  for (const auto& [key, entry] : update) {
    if (!is_valid_key(key)) {
      return reject(ctx, {ShadowErrorCode::kInvalidKey, "invalid key: " + key}, error);
    }
    if (!entry) {
      staged.emplace_back(&key, std::nullopt);
      continue;
    }
    auto tags = normalize_tags(entry->tags);
    if (!tags) {
      return reject(ctx, {ShadowErrorCode::kInvalidTag, "invalid tag on key: " + key}, error);
    }
    staged.emplace_back(&key, TaggedValue{entry->value, std::move(*tags)});
  }

  nlohmann::json fragment = nlohmann::json::object();
  std::vector<std::string> changed;
  changed.reserve(staged.size());
  for (auto& [key, entry] : staged) {
    if (entry) {
      if (ctx.emit_fragment) fragment[*key] = to_json(*entry);
      doc.reported.insert_or_assign(*key, std::move(*entry));
    } else {
      if (ctx.emit_fragment) fragment[*key] = nullptr;
      doc.reported.erase(*key);
    }
    changed.push_back(*key);
  }

  std::vector<ShadowEvent> events;
  finish_mutation(doc, ctx, {{"reported", std::move(fragment)}}, std::move(changed), events);
  if (error) error->reset();
  return events;
}

std::vector<ShadowEvent> apply_desired_in_place(ShadowDocument& doc,
                                                const DesiredUpdate& update,
                                                const MutationContext& ctx,
                                                std::optional<ShadowError>* error) {
  if (auto err = check_version(doc, ctx)) return reject(ctx, std::move(*err), error);
  for (const auto& [key, entry] : update) {
    if (!is_valid_key(key)) {
      return reject(ctx, {ShadowErrorCode::kInvalidKey, "invalid key: " + key}, error);
    }
  }

  nlohmann::json fragment = nlohmann::json::object();
  std::vector<std::string> changed;
  changed.reserve(update.size());
  for (const auto& [key, entry] : update) {
    if (entry) {
      fragment[key] = *entry;
      doc.desired.insert_or_assign(key, *entry);
    } else {
      fragment[key] = nullptr;
      doc.desired.erase(key);
    }
    changed.push_back(key);
  }

  std::vector<ShadowEvent> events;
  finish_mutation(doc, ctx, {{"desired", std::move(fragment)}}, std::move(changed), events);
  if (error) error->reset();
  return events;
}

MutationResult apply_reported(const ShadowDocument& doc, const ReportedUpdate& update,
                              const MutationContext& ctx) {
  MutationResult result{doc, {}, std::nullopt};
  result.events = apply_reported_in_place(result.document, update, ctx, &result.error);
  return result;
}

MutationResult apply_desired(const ShadowDocument& doc, const DesiredUpdate& update,
                             const MutationContext& ctx) {
  MutationResult result{doc, {}, std::nullopt};
  result.events = apply_desired_in_place(result.document, update, ctx, &result.error);
  return result;
}

nlohmann::json to_json(const TaggedValue& value) {
  return nlohmann::json::array({nlohmann::json(value.value), value.tags});
}

nlohmann::json to_json(const ScalarMap& values) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : values) out[k] = v;
  return out;
}

nlohmann::json to_json(const ReportedMap& values) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : values) out[k] = to_json(v);
  return out;
}

}  // namespace twinmesh
