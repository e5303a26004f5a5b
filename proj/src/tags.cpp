// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/tags.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "twinmesh/access.hpp"
#include "twinmesh/glob.hpp"
#include "twinmesh/shadow.hpp"
#include "twinmesh/topic.hpp"

namespace twinmesh {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void push_unique(std::vector<std::string>& out, const std::string& tag) {
  if (std::find(out.begin(), out.end(), tag) == out.end()) out.push_back(tag);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

double number_at(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw std::invalid_argument(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace

void validate_rule(const TagRule& rule) {
  if (rule.key_pattern.empty()) throw std::invalid_argument("rule key pattern is empty");
  if (!is_valid_tag(rule.tag)) throw std::invalid_argument("invalid rule tag: " + rule.tag);
  std::visit(overloaded{[](const predicate::GreaterThan& p) { require_finite(p.threshold, "gt"); },
                        [](const predicate::LessThan& p) { require_finite(p.threshold, "lt"); },
                        [](const predicate::Outside& p) {
                          require_finite(p.lo, "outside.lo");
                          require_finite(p.hi, "outside.hi");
                          if (p.lo > p.hi) throw std::invalid_argument("outside: lo > hi");
                        },
                        [](const predicate::NotNumberOrNegative&) {}},
             rule.predicate);
}

RuleEvaluation evaluate_rules(std::string_view key, const Scalar& value,
                              std::span<const TagRule> rules) {
  struct Hit {
    std::size_t index;
    const TagRule* rule;
  };
  std::vector<Hit> hits;
  RuleEvaluation out;
  auto number = value.as_number();

  for (std::size_t i = 0; i < rules.size(); ++i) {
    const TagRule& rule = rules[i];
    if (!glob_match(rule.key_pattern, key)) continue;
    bool numeric = !std::holds_alternative<predicate::NotNumberOrNegative>(rule.predicate);
    if (numeric && !number) {
      out.diagnostics.push_back({std::string(key), i,
                                 "non-numeric value " + value.to_string() +
                                     " against numeric rule for tag " + rule.tag});
      continue;
    }
    bool holds = std::visit(
        overloaded{[&](const predicate::GreaterThan& p) { return *number > p.threshold; },
                   [&](const predicate::LessThan& p) { return *number < p.threshold; },
                   [&](const predicate::Outside& p) { return *number < p.lo || *number > p.hi; },
                   [&](const predicate::NotNumberOrNegative&) {
                     return !number || *number < 0;
                   }},
        rule.predicate);
    if (holds) hits.push_back({i, &rule});
  }

  // One survivor per family: highest rank, earliest rule on ties.
  for (const Hit& hit : hits) {
    bool beaten = std::any_of(hits.begin(), hits.end(), [&](const Hit& other) {
      return other.index != hit.index && other.rule->family_name() == hit.rule->family_name() &&
             (other.rule->rank > hit.rule->rank ||
              (other.rule->rank == hit.rule->rank && other.index < hit.index));
    });
    if (!beaten) push_unique(out.tags, hit.rule->tag);
  }
  return out;
}

std::vector<std::string> effective_tags(std::span<const std::string> pair_tags,
                                        std::span<const std::string> rule_tags,
                                        std::span<const std::string> admin_tags) {
  std::vector<std::string> out;
  out.reserve(pair_tags.size() + rule_tags.size() + admin_tags.size());
  for (const auto& t : pair_tags) push_unique(out, t);
  for (const auto& t : rule_tags) push_unique(out, t);
  for (const auto& t : admin_tags) push_unique(out, t);
  return out;
}

std::vector<TagRule> rules_from_json(const nlohmann::json& j) {
  std::vector<TagRule> rules;
  for (const auto& r : j.at("rules")) {
    TagRule rule;
    rule.key_pattern = r.at("key").get<std::string>();
    rule.tag = r.at("tag").get<std::string>();
    rule.rank = r.value("rank", 0);
    rule.family = r.value("family", std::string{});
    const auto& when = r.at("when");
    if (!when.is_object() || when.size() != 1) {
      throw std::invalid_argument("rule 'when' must hold exactly one predicate");
    }
    if (when.contains("gt")) {
      rule.predicate = predicate::GreaterThan{number_at(when["gt"], "gt")};
    } else if (when.contains("lt")) {
      rule.predicate = predicate::LessThan{number_at(when["lt"], "lt")};
    } else if (when.contains("outside")) {
      const auto& range = when["outside"];
      if (!range.is_array() || range.size() != 2) {
        throw std::invalid_argument("outside must be [lo, hi]");
      }
      rule.predicate = predicate::Outside{number_at(range[0], "outside.lo"),
                                          number_at(range[1], "outside.hi")};
    } else if (when.contains("not_number_or_negative")) {
      rule.predicate = predicate::NotNumberOrNegative{};
    } else {
      throw std::invalid_argument("unknown predicate: " + when.dump());
    }
    validate_rule(rule);
    rules.push_back(std::move(rule));
  }
  return rules;
}

nlohmann::json rules_to_json(std::span<const TagRule> rules) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rule : rules) {
    nlohmann::json when = std::visit(
        overloaded{[](const predicate::GreaterThan& p) { return nlohmann::json{{"gt", p.threshold}}; },
                   [](const predicate::LessThan& p) { return nlohmann::json{{"lt", p.threshold}}; },
                   [](const predicate::Outside& p) {
                     return nlohmann::json{{"outside", {p.lo, p.hi}}};
                   },
                   [](const predicate::NotNumberOrNegative&) {
                     return nlohmann::json{{"not_number_or_negative", true}};
                   }},
        rule.predicate);
    nlohmann::json entry{{"key", rule.key_pattern}, {"when", when}, {"tag", rule.tag},
                         {"rank", rule.rank}};
    if (!rule.family.empty()) entry["family"] = rule.family;
    arr.push_back(std::move(entry));
  }
  return {{"rules", std::move(arr)}};
}

RuleBook::RuleBook() : rules_(std::make_shared<const std::vector<TagRule>>()) {}

RuleBook::RuleBook(std::vector<TagRule> rules) : RuleBook() { replace(std::move(rules)); }

RuleBook::Snapshot RuleBook::snapshot() const {
  std::lock_guard lock(mu_);
  return rules_;
}

void RuleBook::replace(std::vector<TagRule> rules) {
  for (const auto& r : rules) validate_rule(r);
  auto next = std::make_shared<const std::vector<TagRule>>(std::move(rules));
  std::lock_guard lock(mu_);
  rules_ = std::move(next);
}

AdminTagResult AdminTagStore::push(const std::string& device_id,
                                   std::span<const std::string> tags,
                                   const Principal& principal, const AccessPolicy& policy,
                                   std::int64_t now_ms) {
  Topic admin_topic{device_id, std::nullopt, Channel::kTagsPush};
  if (auto d = authorize(policy, principal, Action::kWrite, admin_topic); !d) {
    return {std::nullopt, AdminTagError::kUnauthorized, d.reason};
  }
  if (tags.empty()) return {std::nullopt, AdminTagError::kInvalidTag, "admin tag set is empty"};
  auto normalized = normalize_tags(tags);
  if (!normalized) return {std::nullopt, AdminTagError::kInvalidTag, "invalid admin tag"};

  auto set = std::make_shared<const AdminTagSet>(
      AdminTagSet{device_id, std::move(*normalized), now_ms});
  std::lock_guard lock(mu_);
  sets_.insert_or_assign(device_id, set);
  return {*set, std::nullopt, {}};
}

std::vector<std::string> AdminTagStore::tags_for(std::string_view device_id) const {
  std::lock_guard lock(mu_);
  auto it = sets_.find(device_id);
  return it == sets_.end() ? std::vector<std::string>{} : it->second->tags;
}

std::optional<AdminTagSet> AdminTagStore::get(std::string_view device_id) const {
  std::lock_guard lock(mu_);
  auto it = sets_.find(device_id);
  if (it == sets_.end()) return std::nullopt;
  return *it->second;
}

}  // namespace twinmesh
