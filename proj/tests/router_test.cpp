// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "twinmesh/router.hpp"

using namespace twinmesh;

namespace {

ReportedMap tire_scenario() {
  return {
      {"tp_ds", TaggedValue{33, {"pressure", "tire", "warning"}}},
      {"tp_ps", TaggedValue{28, {"pressure", "tire", "critical"}}},
  };
}

std::set<std::string> keys_of(const ReportedMap& m) {
  std::set<std::string> out;
  for (const auto& [k, v] : m) out.insert(k);
  return out;
}

}  // namespace

TEST(ParseTags, TireScenario) {
  auto subs = parse_tags(tire_scenario(), 3);
  ASSERT_EQ(subs.size(), 4u);
  EXPECT_EQ(keys_of(subs.at("pressure").pairs), (std::set<std::string>{"tp_ds", "tp_ps"}));
  EXPECT_EQ(keys_of(subs.at("tire").pairs), (std::set<std::string>{"tp_ds", "tp_ps"}));
  EXPECT_EQ(keys_of(subs.at("warning").pairs), (std::set<std::string>{"tp_ds"}));
  EXPECT_EQ(keys_of(subs.at("critical").pairs), (std::set<std::string>{"tp_ps"}));
  EXPECT_EQ(subs.at("critical").source_version, 3u);
  EXPECT_EQ(subs.at("critical").tag, "critical");
  auto oracle = twinmesh::testing::oracle_partition(tire_scenario());
  for (const auto& [tag, sub] : subs) EXPECT_EQ(keys_of(sub.pairs), oracle.at(tag));
}

TEST(ParseTags, UntaggedPairProducesNothing) {
  EXPECT_TRUE(parse_tags(ReportedMap{{"a", TaggedValue{1, {}}}}).empty());
  EXPECT_TRUE(parse_tags(ReportedMap{}).empty());
}

TEST(ParseTags, MatchesMembershipOracle) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 500; ++i) {
    ReportedMap state;
    for (int k = 0; k < 20; ++k) {
      state.emplace("k" + std::to_string(k), TaggedValue{k, twinmesh::testing::random_tags(rng, 6, 8)});
    }
    auto subs = parse_tags(state);
    auto oracle = twinmesh::testing::oracle_partition(state);
    ASSERT_EQ(subs.size(), oracle.size());
    for (const auto& [tag, members] : oracle) {
      ASSERT_TRUE(subs.contains(tag));
      ASSERT_EQ(keys_of(subs.at(tag).pairs), members);
      for (const auto& [k, v] : subs.at(tag).pairs) ASSERT_EQ(v, state.at(k));
    }
  }
}

TEST(ParseTags, UpdateMessageSkipsTombstones) {
  ReportedUpdate message{{"a", TaggedValue{1, {"x"}}}, {"b", std::nullopt}};
  auto subs = parse_tags(message);
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(keys_of(subs.at("x").pairs), std::set<std::string>{"a"});
}

TEST(Route, TireScenarioCreatesFourTwins) {
  TwinRegistry registry("car1");
  auto events = route(parse_tags(tire_scenario(), 1), registry, {100, nullptr});
  ASSERT_EQ(registry.size(), 4u);
  std::size_t changed = 0;
  for (const auto& e : events) {
    changed += e.kind == EventKind::kDocumentsChanged;
    EXPECT_EQ(e.shadow.device, "car1");
  }
  EXPECT_EQ(changed, 4u);
  auto sub = parse_tags(tire_scenario());
  for (const auto& [tag, twin] : registry.entries()) {
    EXPECT_EQ(twin.shadow.reported, sub.at(tag).pairs) << tag;
    EXPECT_TRUE(twin.shadow.desired.empty());
    EXPECT_TRUE(twin.shadow.delta.empty());
    EXPECT_EQ(twin.last_active_ms, 100);
    EXPECT_EQ(twin.state, TwinState::kActive);
  }
}

TEST(Route, EmptyInputIsNoop) {
  TwinRegistry registry("car1");
  route(parse_tags(tire_scenario()), registry, {1, nullptr});
  TwinRegistry before = registry;
  EXPECT_TRUE(route({}, registry, {2, nullptr}).empty());
  EXPECT_EQ(registry, before);
}

TEST(Route, ReplayIsIdempotentButVersioned) {
  TwinRegistry registry("car1");
  auto subs = parse_tags(tire_scenario());
  route(subs, registry, {1, nullptr});
  auto first = registry;
  route(subs, registry, {1, nullptr});
  for (const auto& [tag, twin] : registry.entries()) {
    EXPECT_EQ(twin.shadow.reported, first.find(tag)->shadow.reported);
    EXPECT_EQ(twin.shadow.version, 2u);
  }
}

TEST(Route, CapacityFailureIsPerTag) {
  TwinRegistry registry("car1", 2);
  auto events = route(parse_tags(tire_scenario()), registry, {1, nullptr});
  EXPECT_EQ(registry.size(), 2u);
  std::size_t rejected = 0, changed = 0;
  for (const auto& e : events) {
    rejected += e.kind == EventKind::kRejected;
    changed += e.kind == EventKind::kDocumentsChanged;
    if (e.kind == EventKind::kRejected) EXPECT_EQ(e.payload.at("code"), 503);
  }
  EXPECT_EQ(rejected, 2u);
  EXPECT_EQ(changed, 2u);
}

TEST(Route, PairLeavingATagIsRetracted) {
  TwinRegistry registry("car1");
  ReportedUpdate first{{"tp_ps", TaggedValue{33, {"pressure", "warning"}}}};
  route(parse_tags(first), registry, {1, &first});
  ReportedUpdate second{{"tp_ps", TaggedValue{28, {"pressure", "critical"}}}};
  route(parse_tags(second), registry, {2, &second});
  EXPECT_TRUE(registry.find("warning")->shadow.reported.empty());
  EXPECT_EQ(registry.find("critical")->shadow.reported.size(), 1u);
  EXPECT_EQ(registry.find("pressure")->shadow.reported.at("tp_ps").value, Scalar(28));
  ReportedUpdate gone{{"tp_ps", std::nullopt}};
  route(parse_tags(gone), registry, {3, &gone});
  for (const auto& [tag, twin] : registry.entries()) EXPECT_TRUE(twin.shadow.reported.empty()) << tag;
}

TEST(Route, NoCrossLeakOverRandomStream) {
  std::mt19937_64 rng(22);
  TwinRegistry registry("d");
  ReportedMap base;
  for (int step = 0; step < 400; ++step) {
    ReportedUpdate message;
    for (auto& [k, v] : twinmesh::testing::random_reported(rng, 5, 3, 6, true, 15)) {
      message.emplace(k, v);
    }
    if (rng() % 5 == 0) message.emplace("k" + std::to_string(rng() % 15), std::nullopt);
    for (const auto& [k, v] : message) {
      if (v) {
        base.insert_or_assign(k, *v);
      } else {
        base.erase(k);
      }
    }
    route(parse_tags(message), registry, {step, &message});
    auto oracle = twinmesh::testing::oracle_partition(base);
    for (const auto& [tag, twin] : registry.entries()) {
      for (const auto& [k, v] : twin.shadow.reported) ASSERT_TRUE(v.has_tag(tag)) << tag << " " << k;
      std::set<std::string> expected = oracle.contains(tag) ? oracle.at(tag) : std::set<std::string>{};
      ASSERT_EQ(keys_of(twin.shadow.reported), expected) << tag << " step " << step;
    }
  }
}

TEST(TwinLifecycle, EnsureTwin) {
  TwinRegistry registry("car1");
  TwinEntry* created = ensure_twin(registry, "pressure", 5);
  ASSERT_NE(created, nullptr);
  EXPECT_EQ(created->shadow.version, 0u);
  EXPECT_EQ(created->state, TwinState::kActive);

  created->shadow.version = 7;
  created->state = TwinState::kDormant;
  TwinEntry* woken = ensure_twin(registry, "pressure", 9);
  EXPECT_EQ(woken->state, TwinState::kActive);
  EXPECT_EQ(woken->shadow.version, 7u);

  auto before = registry;
  ensure_twin(registry, "pressure", 9);
  EXPECT_EQ(registry, before);
  EXPECT_THROW(ensure_twin(registry, "Bad Tag", 1), std::invalid_argument);
}

TEST(TwinLifecycle, ReapIdle) {
  constexpr std::int64_t kMinute = 60'000;
  TwinRegistry registry("car1");
  route(parse_tags(tire_scenario()), registry, {0, nullptr});
  ensure_twin(registry, "tire", 9 * kMinute);
  EXPECT_EQ(reap_idle(registry, 10 * kMinute, 5 * kMinute), 3u);
  EXPECT_EQ(registry.find("pressure")->state, TwinState::kDormant);
  EXPECT_EQ(registry.find("tire")->state, TwinState::kActive);
  EXPECT_EQ(reap_idle(registry, 10 * kMinute, 5 * kMinute), 0u);
  EXPECT_EQ(registry.find("pressure")->state, TwinState::kDormant);
  EXPECT_THROW(reap_idle(registry, 0, 0), std::invalid_argument);
}

TEST(TwinLifecycle, ReapThenEnsureRestoresDocument) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    TwinRegistry registry("d");
    route(parse_tags(twinmesh::testing::random_reported(rng, 10, 3, 4)), registry, {0, nullptr});
    auto before = registry;
    reap_idle(registry, 1000, 1);
    for (const auto& [tag, twin] : before.entries()) {
      TwinEntry* restored = ensure_twin(registry, tag, 2000);
      ASSERT_EQ(restored->shadow, twin.shadow);
    }
  }
}

TEST(TwinLifecycle, DormantTwinsReceiveNoRouting) {
  TwinRegistry registry("car1");
  ReportedUpdate first{{"a", TaggedValue{1, {"x", "y"}}}};
  route(parse_tags(first), registry, {0, &first});
  reap_idle(registry, 100, 1);
  ensure_twin(registry, "x", 100);
  ReportedUpdate second{{"a", TaggedValue{2, {"x"}}}};
  route(parse_tags(second), registry, {100, &second});
  EXPECT_EQ(registry.find("y")->state, TwinState::kDormant);
  EXPECT_EQ(registry.find("y")->shadow.reported.at("a").value, Scalar(1));
}

TEST(ForwardDesired, OnlyHeldKeys) {
  TwinRegistry registry("car1");
  route(parse_tags(tire_scenario()), registry, {0, nullptr});
  auto ok = forward_desired(registry, "critical", {{"tp_ps", Scalar(35)}}, 10);
  ASSERT_TRUE(ok.accepted);
  EXPECT_EQ(ok.forward.at("tp_ps"), Scalar(35));
  EXPECT_EQ(registry.find("critical")->forwarded_desired.at("tp_ps"), Scalar(35));
  EXPECT_FALSE(forward_desired(registry, "critical", {{"tp_ds", Scalar(35)}}, 10).accepted);
  EXPECT_FALSE(forward_desired(registry, "location", {{"gps", Scalar(1)}}, 10).accepted);
}
