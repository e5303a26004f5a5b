// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "twinmesh/scalar.hpp"

namespace twinmesh {

struct Principal;
class AccessPolicy;

namespace predicate {
struct GreaterThan {
  double threshold;
};
struct LessThan {
  double threshold;
};
/// Holds when value < lo or value > hi.
struct Outside {
  double lo;
  double hi;
};
/// Holds for any non-numeric value or a negative number; flags sensors
/// that are reporting garbage.
struct NotNumberOrNegative {};
}  // namespace predicate

using Predicate = std::variant<predicate::GreaterThan, predicate::LessThan,
                               predicate::Outside, predicate::NotNumberOrNegative>;

/// Threshold rule that attaches `tag` to matching readings.
///
/// Rules sharing a key pattern and family form one severity ladder; when
/// several rules of a family fire only the highest rank survives, so a
/// `critical` reading does not also carry `warning`. The family defaults to
/// the key pattern.
struct TagRule {
  std::string key_pattern;
  Predicate predicate;
  std::string tag;
  int rank = 0;
  std::string family;

  const std::string& family_name() const { return family.empty() ? key_pattern : family; }
};

/// Throws std::invalid_argument when a threshold is non-finite, lo > hi, or
/// the tag is not a valid tag name.
void validate_rule(const TagRule& rule);

struct RuleDiagnostic {
  std::string key;
  std::size_t rule_index;
  std::string message;
};

struct RuleEvaluation {
  std::vector<std::string> tags;
  std::vector<RuleDiagnostic> diagnostics;
};

/// Tags produced by `rules` for one reading, in rule order. Numeric
/// predicates against non-numeric values are skipped and reported as
/// diagnostics rather than errors.
RuleEvaluation evaluate_rules(std::string_view key, const Scalar& value,
                              std::span<const TagRule> rules);

/// Deduplicated union: device tags, then rule tags, then admin tags.
std::vector<std::string> effective_tags(std::span<const std::string> pair_tags,
                                        std::span<const std::string> rule_tags,
                                        std::span<const std::string> admin_tags);

// Rule file:
//   {"rules":[{"key":"tire_pressure_*","when":{"lt":30},"tag":"critical","rank":2}]}
// `when` holds exactly one of "gt", "lt", "outside":[lo,hi],
// "not_number_or_negative":true. Optional "family" groups rules.
std::vector<TagRule> rules_from_json(const nlohmann::json& j);
nlohmann::json rules_to_json(std::span<const TagRule> rules);

/// Immutable rule snapshot, swapped atomically on reload.
class RuleBook {
 public:
  using Snapshot = std::shared_ptr<const std::vector<TagRule>>;

  RuleBook();
  explicit RuleBook(std::vector<TagRule> rules);

  Snapshot snapshot() const;
  void replace(std::vector<TagRule> rules);

 private:
  mutable std::mutex mu_;
  Snapshot rules_;
};

struct AdminTagSet {
  std::string device_id;
  std::vector<std::string> tags;
  std::int64_t applied_at_ms = 0;

  friend bool operator==(const AdminTagSet&, const AdminTagSet&) = default;
};

enum class AdminTagError { kUnauthorized, kInvalidTag };

struct AdminTagResult {
  std::optional<AdminTagSet> applied;
  std::optional<AdminTagError> error;
  std::string reason;

  bool ok() const { return !error.has_value(); }
};

/// Per-device sticky tags. Only principals allowed to publish on the
/// device's admin channel may replace them.
class AdminTagStore {
 public:
  AdminTagResult push(const std::string& device_id, std::span<const std::string> tags,
                      const Principal& principal, const AccessPolicy& policy,
                      std::int64_t now_ms);

  /// Current tags for a device; empty when none were pushed.
  std::vector<std::string> tags_for(std::string_view device_id) const;
  std::optional<AdminTagSet> get(std::string_view device_id) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const AdminTagSet>, std::less<>> sets_;
};

}  // namespace twinmesh
