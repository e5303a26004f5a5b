// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "twinmesh/shadow.hpp"

namespace twinmesh {

/// The slice of a reported message that belongs to one tag shadow. Every
/// pair carries `tag`.
struct SubDocument {
  std::string tag;
  ReportedMap pairs;
  std::uint64_t source_version = 0;

  friend bool operator==(const SubDocument&, const SubDocument&) = default;
};

using SubDocumentMap = std::map<std::string, SubDocument, std::less<>>;

/// Splits reported pairs by tag. A pair with n tags lands in exactly n
/// sub-documents; untagged pairs land in none.
SubDocumentMap parse_tags(const ReportedMap& reported, std::uint64_t source_version = 0);
/// Same, over an update message; tombstones are skipped.
SubDocumentMap parse_tags(const ReportedUpdate& message, std::uint64_t source_version = 0);

enum class TwinState { kActive, kDormant };

struct TwinEntry {
  // Tag shadows hold only the reported subgroup; desired and delta stay
  // empty because the base shadow owns delta computation.
  ShadowDocument shadow;
  std::int64_t last_active_ms = 0;
  TwinState state = TwinState::kActive;
  // Desired writes accepted on this twin and forwarded to the base shadow.
  ScalarMap forwarded_desired;

  friend bool operator==(const TwinEntry&, const TwinEntry&) = default;
};

struct RouteContext {
  std::int64_t now_ms = 0;
  // The reported message the sub-documents came from. When set, active
  // twins holding a key that the message now reports without their tag (or
  // tombstones) drop that key, so a twin never keeps a pair that left it.
  const ReportedUpdate* message = nullptr;
};

/// Tag shadows of one device, keyed by tag.
class TwinRegistry {
 public:
  static constexpr std::size_t kDefaultMaxTwins = 4096;

  explicit TwinRegistry(std::string device_id, std::size_t max_twins = kDefaultMaxTwins)
      : device_id_(std::move(device_id)), max_twins_(max_twins) {}

  const std::string& device_id() const { return device_id_; }
  std::size_t max_twins() const { return max_twins_; }

  const std::map<std::string, TwinEntry, std::less<>>& entries() const { return entries_; }
  const TwinEntry* find(std::string_view tag) const;
  TwinEntry* find(std::string_view tag);
  std::size_t size() const { return entries_.size(); }
  std::size_t active_count() const;

  friend bool operator==(const TwinRegistry&, const TwinRegistry&) = default;

 private:
  friend TwinEntry* ensure_twin(TwinRegistry&, std::string_view, std::int64_t);
  friend std::vector<ShadowEvent> route(const SubDocumentMap&, TwinRegistry&,
                                        const RouteContext&);
  friend std::size_t reap_idle(TwinRegistry&, std::int64_t, std::int64_t);

  std::string device_id_;
  std::size_t max_twins_;
  std::map<std::string, TwinEntry, std::less<>> entries_;
};

/// Creates the twin for `tag` (empty document, active) or reactivates a
/// dormant one with its document intact. Returns nullptr when the registry
/// is at capacity. Throws std::invalid_argument for an invalid tag.
TwinEntry* ensure_twin(TwinRegistry& registry, std::string_view tag, std::int64_t now_ms);


/// Merges each sub-document into its twin via apply_reported and emits one
/// kDocumentsChanged per touched twin. A twin that cannot be instantiated
/// yields kRejected for that tag only.
std::vector<ShadowEvent> route(const SubDocumentMap& subdocs, TwinRegistry& registry,
                               const RouteContext& ctx);

/// Marks active twins idle for longer than `idle_threshold_ms` dormant.
/// Returns how many were reaped. Throws std::invalid_argument unless the
/// threshold is positive.
std::size_t reap_idle(TwinRegistry& registry, std::int64_t now_ms,
                      std::int64_t idle_threshold_ms);

struct ForwardResult {
  bool accepted = false;
  std::string reason;
  DesiredUpdate forward;  // what the base shadow should apply
};

/// Desired write arriving on a tag shadow. Only keys the twin currently
/// holds are accepted; the write is recorded in the twin's ledger and handed
/// back for the base shadow to apply.
ForwardResult forward_desired(TwinRegistry& registry, std::string_view tag,
                              const DesiredUpdate& update, std::int64_t now_ms);

}  // namespace twinmesh
