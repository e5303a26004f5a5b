// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinmesh/scalar.hpp"

namespace twinmesh {

// Tag names: [a-z0-9_-]{1,64}, after lowercasing.
bool is_valid_tag(std::string_view tag);

// Shadow keys: [a-zA-Z0-9_./-]{1,128}.
bool is_valid_key(std::string_view key);

/// Lowercases, validates and deduplicates (first occurrence wins) a tag
/// list. Returns nullopt if any tag is invalid after lowercasing.
std::optional<std::vector<std::string>> normalize_tags(
    std::span<const std::string> tags);

/// A reported reading and the tags attached to it.
struct TaggedValue {
  Scalar value;
  std::vector<std::string> tags;

  bool has_tag(std::string_view tag) const;

  friend bool operator==(const TaggedValue&, const TaggedValue&) = default;
};

using ReportedMap = std::map<std::string, TaggedValue, std::less<>>;
using ScalarMap = std::map<std::string, Scalar, std::less<>>;

// Update payloads. A disengaged optional is a tombstone: the key is removed
// from the targeted subgroup.
using ReportedUpdate = std::map<std::string, std::optional<TaggedValue>, std::less<>>;
using DesiredUpdate = std::map<std::string, std::optional<Scalar>, std::less<>>;

struct ShadowDocument {
  ReportedMap reported;
  ScalarMap desired;
  ScalarMap delta;
  std::uint64_t version = 0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const ShadowDocument&, const ShadowDocument&) = default;
};

/// Identifies a base shadow (no tag) or one of its tag shadows.
struct ShadowId {
  std::string device;
  std::optional<std::string> tag;

  std::string to_string() const;

  friend bool operator==(const ShadowId&, const ShadowId&) = default;
};

enum class EventKind {
  kAccepted,
  kRejected,
  kDeltaPublished,
  kDocumentsChanged,
  kResolved,
};

std::string_view to_string(EventKind kind);

struct ShadowEvent {
  EventKind kind;
  ShadowId shadow;
  nlohmann::json payload;
};

enum class ShadowErrorCode {
  kInvalidKey,
  kInvalidTag,
  kVersionConflict,
};

struct ShadowError {
  ShadowErrorCode code;
  std::string message;
};

/// Who is mutating which shadow, and when.
struct MutationContext {
  ShadowId shadow;
  std::int64_t now_ms = 0;
  // Optimistic concurrency: updates carrying a version older than the
  // document's current version are rejected.
  std::optional<std::uint64_t> expected_version;
  // When false the accepted event carries only version and timestamp, not
  // the merged fragment. Used for tag shadows, whose content is published
  // separately.
  bool emit_fragment = true;
};

struct MutationResult {
  ShadowDocument document;
  std::vector<ShadowEvent> events;
  std::optional<ShadowError> error;

  bool accepted() const { return !error.has_value(); }
};

/// Desired keys that are missing from `reported` or whose reported value
/// differs. Tags are ignored.
ScalarMap compute_delta(const ReportedMap& reported, const ScalarMap& desired);

/// Drops every desired key whose reported value already matches, from both
/// desired and delta. Idempotent.
ShadowDocument resolve_matched(ShadowDocument doc);

/// Merges reported pairs (update wins, tags normalized), resolves matched
/// desired keys and recomputes the delta. Rejections leave the document
/// untouched and carry a single kRejected event.
MutationResult apply_reported(const ShadowDocument& doc, const ReportedUpdate& update,
                              const MutationContext& ctx);

MutationResult apply_desired(const ShadowDocument& doc, const DesiredUpdate& update,
                             const MutationContext& ctx);

// In-place variants used on hot paths by the owning actor. Same semantics:
// on rejection `doc` is not modified.
std::vector<ShadowEvent> apply_reported_in_place(ShadowDocument& doc,
                                                 const ReportedUpdate& update,
                                                 const MutationContext& ctx,
                                                 std::optional<ShadowError>* error = nullptr);
std::vector<ShadowEvent> apply_desired_in_place(ShadowDocument& doc,
                                                const DesiredUpdate& update,
                                                const MutationContext& ctx,
                                                std::optional<ShadowError>* error = nullptr);

/// Immutable copy of the document for readers outside the owning actor.
inline ShadowDocument get_document(const ShadowDocument& doc) { return doc; }

// JSON fragments shared with the wire codec.
nlohmann::json to_json(const TaggedValue& value);
nlohmann::json to_json(const ScalarMap& values);
nlohmann::json to_json(const ReportedMap& values);

}  // namespace twinmesh
