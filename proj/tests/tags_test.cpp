// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "twinmesh/access.hpp"
#include "twinmesh/router.hpp"
#include "twinmesh/tags.hpp"

using namespace twinmesh;
namespace p = twinmesh::predicate;

namespace {

std::vector<TagRule> pressure_rules() {
  return {
      TagRule{"tire_pressure_*", p::LessThan{35}, "warning", 1, ""},
      TagRule{"tire_pressure_*", p::LessThan{30}, "critical", 2, ""},
  };
}

const Principal kAdmin{"ops", {}, {Role::kAdmin}, std::nullopt};
const Principal kApp{"app1", {}, {Role::kApp}, std::nullopt};

}  // namespace

TEST(EvaluateRules, TemperatureCeiling) {
  std::vector<TagRule> rules{TagRule{"temperature", p::GreaterThan{100}, "warning", 1, ""}};
  EXPECT_EQ(evaluate_rules("temperature", 101, rules).tags, std::vector<std::string>{"warning"});
  EXPECT_TRUE(evaluate_rules("temperature", 25, rules).tags.empty());
  EXPECT_TRUE(evaluate_rules("humidity", 101, rules).tags.empty());
}

TEST(EvaluateRules, HigherRankOverridesWithinFamily) {
  auto rules = pressure_rules();
  EXPECT_EQ(evaluate_rules("tire_pressure_ps", 28, rules).tags, std::vector<std::string>{"critical"});
  EXPECT_EQ(evaluate_rules("tire_pressure_ds", 33, rules).tags, std::vector<std::string>{"warning"});
  EXPECT_TRUE(evaluate_rules("tire_pressure_ds", 36, rules).tags.empty());
  EXPECT_TRUE(evaluate_rules("temperature", 25, rules).tags.empty());

  // Oracle: enumerate both rules, keep the max rank among those that fire.
  for (double v = 20; v < 40; v += 0.25) {
    const TagRule* best = nullptr;
    for (const auto& r : rules) {
      const auto& lt = std::get<p::LessThan>(r.predicate);
      if (v < lt.threshold && (!best || r.rank > best->rank)) best = &r;
    }
    auto got = evaluate_rules("tire_pressure_x", v, rules).tags;
    if (best) {
      EXPECT_EQ(got, std::vector<std::string>{best->tag}) << v;
    } else {
      EXPECT_TRUE(got.empty()) << v;
    }
  }
}

TEST(EvaluateRules, SeparateFamiliesUnion) {
  std::vector<TagRule> rules{
      TagRule{"temperature", p::GreaterThan{100}, "warning", 1, ""},
      TagRule{"temperature", p::GreaterThan{120}, "critical", 2, ""},
      TagRule{"temperature", p::Outside{0, 50}, "out_of_band", 0, "band"},
  };
  EXPECT_EQ(evaluate_rules("temperature", 130, rules).tags,
            (std::vector<std::string>{"critical", "out_of_band"}));
}

TEST(EvaluateRules, NonNumericSkippedWithDiagnostic) {
  std::vector<TagRule> rules{
      TagRule{"temperature", p::GreaterThan{100}, "warning", 1, ""},
      TagRule{"temperature", p::NotNumberOrNegative{}, "malfunction", 0, "sanity"},
  };
  auto garbage = evaluate_rules("temperature", "NaN-ish", rules);
  EXPECT_EQ(garbage.tags, std::vector<std::string>{"malfunction"});
  ASSERT_EQ(garbage.diagnostics.size(), 1u);
  EXPECT_EQ(garbage.diagnostics[0].rule_index, 0u);
  EXPECT_EQ(evaluate_rules("temperature", -4, rules).tags, std::vector<std::string>{"malfunction"});
  EXPECT_TRUE(evaluate_rules("temperature", 40, rules).tags.empty());
  EXPECT_TRUE(evaluate_rules("temperature", true, rules).diagnostics.size() == 1);
}

TEST(EvaluateRules, MonotoneSeverity) {
  auto rules = pressure_rules();
  int previous_rank = -1;
  for (double v = 40; v > 10; v -= 0.5) {
    auto tags = evaluate_rules("tire_pressure_ps", v, rules).tags;
    int rank = -1;
    for (const auto& r : rules) {
      if (!tags.empty() && tags[0] == r.tag) rank = r.rank;
    }
    if (previous_rank >= 0) ASSERT_FALSE(tags.empty()) << "tag removed at " << v;
    ASSERT_GE(rank, previous_rank) << v;
    previous_rank = rank;
  }
}

TEST(EvaluateRules, Deterministic) {
  auto rules = pressure_rules();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0, 60);
  for (int i = 0; i < 200; ++i) {
    double v = dist(rng);
    EXPECT_EQ(evaluate_rules("tire_pressure_a", v, rules).tags,
              evaluate_rules("tire_pressure_a", v, rules).tags);
  }
}

TEST(ValidateRule, RejectsMalformedRules) {
  EXPECT_THROW(validate_rule({"k", p::GreaterThan{INFINITY}, "w", 0, ""}), std::invalid_argument);
  EXPECT_THROW(validate_rule({"k", p::Outside{5, 1}, "w", 0, ""}), std::invalid_argument);
  EXPECT_THROW(validate_rule({"k", p::LessThan{1}, "Bad Tag", 0, ""}), std::invalid_argument);
  EXPECT_NO_THROW(validate_rule({"k", p::Outside{1, 1}, "w", 0, ""}));
}

TEST(EffectiveTags, OrderedDedupedUnion) {
  using V = std::vector<std::string>;
  V device{"pressure", "tire"}, rule{"critical"}, none;
  EXPECT_EQ(effective_tags(device, rule, none), (V{"pressure", "tire", "critical"}));
  V a{"a"};
  EXPECT_EQ(effective_tags(a, a, a), V{"a"});
  auto empty = effective_tags(none, none, none);
  EXPECT_TRUE(empty.empty());
  // An untagged pair produces no sub-document.
  EXPECT_TRUE(parse_tags(ReportedMap{{"k", TaggedValue{1, empty}}}).empty());
  V admin{"audit", "motion"};
  V motion{"motion"};
  EXPECT_EQ(effective_tags(motion, none, admin), (V{"motion", "audit"}));
}

TEST(RuleFile, RoundTrip) {
  auto j = nlohmann::json::parse(R"({"rules":[
    {"key":"tire_pressure_*","when":{"lt":30},"tag":"critical","rank":2},
    {"key":"temperature","when":{"gt":100},"tag":"warning","rank":1},
    {"key":"rpm","when":{"outside":[500,7000]},"tag":"engine","rank":0,"family":"rpm-band"},
    {"key":"*","when":{"not_number_or_negative":true},"tag":"suspect"}]})");
  auto rules = rules_from_json(j);
  ASSERT_EQ(rules.size(), 4u);
  EXPECT_EQ(rules[0].rank, 2);
  EXPECT_EQ(std::get<p::Outside>(rules[2].predicate).hi, 7000);
  EXPECT_EQ(rules[2].family_name(), "rpm-band");
  EXPECT_EQ(rules[3].family_name(), "*");
  EXPECT_EQ(rules_from_json(rules_to_json(rules)).size(), 4u);
  EXPECT_EQ(rules_to_json(rules_from_json(rules_to_json(rules))), rules_to_json(rules));

  EXPECT_THROW(rules_from_json(nlohmann::json::parse(R"({"rules":[{"key":"a","when":{},"tag":"x"}]})")),
               std::invalid_argument);
  EXPECT_THROW(rules_from_json(nlohmann::json::parse(
                   R"({"rules":[{"key":"a","when":{"gt":1,"lt":2},"tag":"x"}]})")),
               std::invalid_argument);
  EXPECT_THROW(rules_from_json(nlohmann::json::parse(
                   R"({"rules":[{"key":"a","when":{"outside":[3,1]},"tag":"x"}]})")),
               std::invalid_argument);
}

TEST(RuleBook, SnapshotsSurviveReplace) {
  RuleBook book(pressure_rules());
  auto before = book.snapshot();
  book.replace({});
  EXPECT_EQ(before->size(), 2u);
  EXPECT_TRUE(book.snapshot()->empty());
}

TEST(AdminTags, PushAuthorizationAndValidation) {
  AdminTagStore store;
  AccessPolicy policy;
  std::vector<std::string> audit{"audit"};

  auto denied = store.push("car1", audit, kApp, policy, 10);
  EXPECT_EQ(denied.error, AdminTagError::kUnauthorized);
  EXPECT_FALSE(store.get("car1"));

  // Even an explicit grant on the base shadow does not open the admin channel.
  AccessPolicy generous({Grant{"app1", "*", "*", Action::kWrite}, Grant{"app1", "*", "#base", Action::kWrite}});
  EXPECT_EQ(store.push("car1", audit, kApp, generous, 10).error, AdminTagError::kUnauthorized);

  std::vector<std::string> none;
  EXPECT_EQ(store.push("car1", none, kAdmin, policy, 10).error, AdminTagError::kInvalidTag);
  std::vector<std::string> bad{"ok", "not valid"};
  EXPECT_EQ(store.push("car1", bad, kAdmin, policy, 10).error, AdminTagError::kInvalidTag);
  EXPECT_FALSE(store.get("car1"));

  auto ok = store.push("car1", audit, kAdmin, policy, 42);
  ASSERT_TRUE(ok.ok());
  EXPECT_EQ(*store.get("car1"), (AdminTagSet{"car1", {"audit"}, 42}));
  EXPECT_EQ(store.tags_for("car1"), audit);
  EXPECT_TRUE(store.tags_for("car2").empty());

  // A failed push leaves the previous set in place.
  EXPECT_FALSE(store.push("car1", none, kAdmin, policy, 50).ok());
  EXPECT_EQ(store.tags_for("car1"), audit);

  std::vector<std::string> replaced{"Maintenance", "maintenance"};
  ASSERT_TRUE(store.push("car1", replaced, kAdmin, policy, 60).ok());
  EXPECT_EQ(store.tags_for("car1"), std::vector<std::string>{"maintenance"});
}
