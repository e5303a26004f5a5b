// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "twinmesh/bus.hpp"
#include "twinmesh/device.hpp"
#include "twinmesh/wire.hpp"

using namespace twinmesh;

namespace {

const Principal kAdmin{"ops", {}, {Role::kAdmin}, std::nullopt};
const Principal kCar1{"car1-dev", {}, {Role::kDevice}, "car1"};

struct Rig {
  std::int64_t now = 0;
  InProcessBus bus{std::make_shared<AccessController>()};
  SimulatedDevice device{bus, kCar1, [this] { return now; }};
  std::vector<std::string> reports;

  Rig() {
    bus.subscribe(kAdmin, "things/car1/shadow/update", [this](const Delivery& d) {
      reports.push_back(d.message.payload);
      return true;
    });
  }
  std::vector<std::string> drain() {
    bus.run_until_idle();
    return std::exchange(reports, {});
  }
};

}  // namespace

TEST(Device, RequiresDeviceBinding) {
  InProcessBus bus(std::make_shared<AccessController>());
  EXPECT_THROW(SimulatedDevice(bus, kAdmin), std::invalid_argument);
}

TEST(Device, ConformsToDelta) {
  Rig rig;
  rig.device.configure_sensor({"speed", 60, {"motion"}, 0});
  auto report = rig.device.on_delta_conform({{"speed", 65}});
  EXPECT_EQ(report, (ReportedUpdate{{"speed", TaggedValue{65, {"motion"}}}}));
  auto sent = rig.drain();
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(decode_update(sent[0]).reported, report);
  EXPECT_EQ(rig.device.sensors().at("speed").value, Scalar(65));

  EXPECT_TRUE(rig.device.on_delta_conform({}).empty());
  EXPECT_TRUE(rig.drain().empty());

  auto adopted = rig.device.on_delta_conform({{"new_key", 1}});
  EXPECT_EQ(adopted.at("new_key"), (TaggedValue{1, {}}));
  EXPECT_EQ(rig.device.diagnostics().size(), 1u);
  EXPECT_TRUE(rig.device.sensors().contains("new_key"));
}

TEST(Device, FollowsDeltaChannel) {
  Rig rig;
  rig.device.configure_sensor({"speed", 60, {"motion"}, 0});
  ASSERT_TRUE(rig.device.connect());
  rig.bus.publish(kAdmin, {"things/car1/shadow/update/delta", encode_delta({{"speed", 70}}, 2, 0), 1, {}});
  auto sent = rig.drain();
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(decode_update(sent[0]).reported->at("speed")->value, Scalar(70));
}

TEST(Device, LatencyDefersReport) {
  Rig rig;
  rig.device.configure_sensor({"valve", "closed", {}, 500});
  rig.device.on_delta_conform({{"valve", "open"}});
  EXPECT_TRUE(rig.drain().empty());
  EXPECT_EQ(rig.device.pending_reports(), 1u);
  rig.now = 499;
  rig.device.tick();
  EXPECT_TRUE(rig.drain().empty());
  rig.now = 500;
  rig.device.tick();
  EXPECT_EQ(rig.drain().size(), 1u);
  EXPECT_EQ(rig.device.pending_reports(), 0u);
}

TEST(Device, EmitReported) {
  Rig rig;
  rig.device.configure_sensor({"speed", 60, {"motion"}, 0});
  rig.device.configure_sensor({"heater", "off", {"climate"}, 0});
  auto report = rig.device.emit_reported();
  EXPECT_EQ(report.size(), 2u);
  auto first = rig.drain();
  rig.device.emit_reported();
  auto second = rig.drain();
  ASSERT_EQ(first.size(), 1u);
  ASSERT_EQ(second.size(), 1u);
  EXPECT_EQ(first[0], second[0]);  // byte-identical

  rig.device.on_delta_conform({{"speed", 80}});
  rig.drain();
  EXPECT_EQ(rig.device.emit_reported().at("speed")->value, Scalar(80));
}

TEST(Device, ConfigureSensor) {
  Rig rig;
  EXPECT_TRUE(rig.device.emit_reported().empty());
  EXPECT_EQ(rig.drain().size(), 1u);  // an empty report is still a report
  rig.device.configure_sensor({"speed", 60, {"motion"}, 0});
  EXPECT_TRUE(rig.device.emit_reported().contains("speed"));
  rig.device.configure_sensor({"speed", 60, {"motion", "engine"}, 0});
  EXPECT_EQ(rig.device.emit_reported().at("speed")->tags, (std::vector<std::string>{"motion", "engine"}));
  EXPECT_THROW(rig.device.configure_sensor({"bad key", 1, {}, 0}), std::invalid_argument);
}

TEST(DeviceConfig, Parses) {
  auto config = device_config_from_json(nlohmann::json::parse(
      R"({"id":"car1","sensors":[{"key":"speed","value":60,"tags":["motion"]},
                                  {"key":"valve","value":"closed","latency_ms":20}],
          "rules":[{"key":"speed","when":{"gt":120},"tag":"warning"}]})"));
  EXPECT_EQ(config.id, "car1");
  ASSERT_EQ(config.sensors.size(), 2u);
  EXPECT_EQ(config.sensors[1].conform_latency_ms, 20);
  EXPECT_EQ(config.rules.size(), 1u);
  EXPECT_THROW(device_config_from_json(nlohmann::json::parse(
                   R"({"id":"car1","sensors":[{"key":"a","value":1},{"key":"a","value":2}]})")),
               std::invalid_argument);
  EXPECT_THROW(device_config_from_json(nlohmann::json::parse(R"({"id":"car 1"})")),
               std::invalid_argument);
}
