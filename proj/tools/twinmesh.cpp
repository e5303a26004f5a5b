// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

// twinmesh: edge shadow service, benchmarks and admin tooling.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "twinmesh/access.hpp"
#include "twinmesh/bench.hpp"
#include "twinmesh/bus.hpp"
#include "twinmesh/config.hpp"
#include "twinmesh/credentials.hpp"
#include "twinmesh/device.hpp"
#include "twinmesh/service.hpp"
#include "twinmesh/wire.hpp"

namespace {

using namespace twinmesh;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json payload_json(const std::string& payload) {
  auto parsed = json::parse(payload, nullptr, false);
  return parsed.is_discarded() ? json(payload) : parsed;
}

// A running edge node: bus, shadow service and the configured devices.
class Node {
 public:
  explicit Node(ServeConfig config)
      : config_(std::move(config)),
        access_(std::make_shared<AccessController>(config_.policy)),
        bus_(access_),
        service_(bus_, access_, ServiceOptions{config_.idle_threshold_ms}) {
    service_.rules().replace(config_.rules);
    service_.start();
    for (const auto& dc : config_.devices) {
      auto device = std::make_unique<SimulatedDevice>(bus_, device_principal(dc.id));
      for (const auto& sensor : dc.sensors) device->configure_sensor(sensor);
      device->connect();
      devices_.emplace(dc.id, std::move(device));
    }
  }

  void report_all() {
    for (auto& [id, device] : devices_) device->emit_reported();
    bus_.run_until_idle();
  }

  InProcessBus& bus() { return bus_; }
  ShadowService& service() { return service_; }
  AccessController& access() { return *access_; }
  const CredentialStore& credentials() const { return config_.credentials; }
  SimulatedDevice* device(const std::string& id) {
    auto it = devices_.find(id);
    return it == devices_.end() ? nullptr : it->second.get();
  }
  std::map<std::string, std::unique_ptr<SimulatedDevice>>& devices() { return devices_; }

 private:
  Principal device_principal(const std::string& device_id) const {
    for (const auto& [id, p] : config_.credentials.principals()) {
      if (p.has_role(Role::kDevice) && p.device_id == device_id) return p;
    }
    return Principal{device_id + "-device", {}, {Role::kDevice}, device_id};
  }

  ServeConfig config_;
  std::shared_ptr<AccessController> access_;
  InProcessBus bus_;
  ShadowService service_;
  std::map<std::string, std::unique_ptr<SimulatedDevice>> devices_;
};

json twin_listing(const TwinRegistry& registry) {
  json twins = json::array();
  for (const auto& [tag, twin] : registry.entries()) {
    json keys = json::array();
    for (const auto& [key, value] : twin.shadow.reported) keys.push_back(key);
    twins.push_back({{"tag", tag},
                     {"state", twin.state == TwinState::kActive ? "active" : "dormant"},
                     {"version", twin.shadow.version},
                     {"last_active_ms", twin.last_active_ms},
                     {"keys", std::move(keys)}});
  }
  return twins;
}

// Line protocol on stdin, one JSON object per line:
//   {"op":"connect","id":"app1","password":"..."}     or "psk_hex":"..."
//   {"op":"subscribe","as":"app1","filter":"things/car1/shadow/name/pressure/#"}
//   {"op":"publish","as":"app1","topic":"...","payload":{...}}
//   {"op":"report","device":"car1"}       device publishes its full state
//   {"op":"reap"}                          reap idle tag shadows
//   {"op":"grant"|"revoke","as":"admin","grant":{...policy grant...}}
// Every delivery and refusal is written to stdout as one JSON line.
int run_serve(const std::string& config_path, std::istream& in, std::ostream& out) {
  std::unique_ptr<Node> node;
  try {
    node = std::make_unique<Node>(load_serve_config(config_path));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::map<std::string, Principal> sessions;
  auto emit = [&](json line) { out << line.dump() << '\n' << std::flush; };

  node->report_all();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json cmd = json::parse(line, nullptr, false);
    if (cmd.is_discarded() || !cmd.is_object()) {
      emit({{"event", "error"}, {"message", "expected one JSON object per line"}});
      continue;
    }
    std::string op = cmd.value("op", "");
    auto session = [&]() -> const Principal* {
      auto it = sessions.find(cmd.value("as", ""));
      if (it == sessions.end()) {
        emit({{"event", "error"}, {"op", op}, {"message", "not connected: " + cmd.value("as", "")}});
        return nullptr;
      }
      return &it->second;
    };

    if (op == "connect") {
      std::string id = cmd.value("id", "");
      std::optional<Principal> principal;
      if (cmd.contains("password")) {
        principal = node->credentials().authenticate_password(id, cmd["password"].get<std::string>());
      } else if (cmd.contains("psk_hex")) {
        std::string hex = cmd["psk_hex"].get<std::string>();
        std::vector<std::uint8_t> key;
        for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
          key.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
        }
        principal = node->credentials().authenticate_psk(id, key);
      }
      if (!principal) {
        emit({{"event", "auth-failed"}, {"id", id}});
        continue;
      }
      sessions.insert_or_assign(id, *principal);
      emit({{"event", "connected"}, {"id", id}});
    } else if (op == "subscribe") {
      const Principal* p = session();
      if (!p) continue;
      std::string who = p->id;
      auto result = node->bus().subscribe(*p, cmd.value("filter", ""), [&, who](const Delivery& d) {
        emit({{"event", "deliver"},
              {"to", who},
              {"topic", d.message.topic},
              {"payload", payload_json(d.message.payload)}});
        return true;
      });
      if (result) {
        emit({{"event", "subscribed"}, {"id", who}, {"filter", cmd.value("filter", "")}});
      } else {
        emit({{"event", "denied"}, {"op", "subscribe"}, {"id", who}, {"reason", result.reason}});
      }
    } else if (op == "publish") {
      const Principal* p = session();
      if (!p) continue;
      const json& payload = cmd.contains("payload") ? cmd["payload"] : json::object();
      std::string body = payload.is_string() ? payload.get<std::string>() : payload.dump();
      auto result = node->bus().publish(*p, WireMessage{cmd.value("topic", ""), body,
                                                        cmd.value("qos", 1), {}});
      if (!result) {
        emit({{"event", "denied"}, {"op", "publish"}, {"id", p->id}, {"reason", result.reason}});
      }
    } else if (op == "report") {
      if (auto* device = node->device(cmd.value("device", ""))) {
        device->emit_reported();
      } else {
        emit({{"event", "error"}, {"message", "unknown device"}});
      }
    } else if (op == "reap") {
      emit({{"event", "reaped"}, {"count", node->service().reap_idle_twins()}});
    } else if (op == "grant" || op == "revoke") {
      const Principal* p = session();
      if (!p) continue;
      try {
        auto policy = policy_from_json({{"grants", json::array({cmd.at("grant")})}});
        const Grant& g = *policy.grants().begin();
        if (op == "grant") {
          node->access().grant(*p, g);
        } else {
          node->access().revoke(*p, g);
        }
        emit({{"event", op + "ed"}});
      } catch (const std::exception& e) {
        emit({{"event", "denied"}, {"op", op}, {"reason", e.what()}});
      }
    } else {
      emit({{"event", "error"}, {"message", "unknown op: " + op}});
    }
    node->bus().run_until_idle();
    for (auto& [id, device] : node->devices()) device->tick();
    node->bus().run_until_idle();
  }
  return kExitOk;
}

int run_bench(bool dynamic, std::size_t max_pairs, std::size_t trials,
              const std::vector<int>& tags, const std::string& out_path) {
  BenchOptions options;
  options.max_pairs = max_pairs;
  options.trials = trials;
  options.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
  BenchResult result = dynamic ? run_dynamic_scaling(options) : run_static_scaling(tags, options);
  std::vector<std::string> warnings;
  auto summary = summarize(result.records, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  try {
    if (out_path.empty() || out_path == "-") {
      std::cout << to_csv(summary);
    } else {
      emit_csv(summary, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitFailure;
  }
  if (result.verification_failures > 0) {
    std::cerr << result.verification_failures << " state verification failures\n";
    return kExitAborted;
  }
  if (result.aborted_trials > 0) {
    std::cerr << result.aborted_trials << " trials aborted\n";
    return kExitAborted;
  }
  return kExitOk;
}

int run_policy_edit(bool add, const std::string& policy_path, const Grant& entry) {
  const Principal operator_principal{"twinmesh-cli", {}, {Role::kAdmin}, std::nullopt};
  try {
    AccessPolicy policy;
    if (std::ifstream(policy_path)) policy = policy_from_json(read_json_file(policy_path));
    policy = add ? grant(policy, operator_principal, entry) : revoke(policy, operator_principal, entry);
    write_json_file(policy_path, policy_to_json(policy));
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "invalid policy: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

int run_push_tags(const std::string& config_path, const std::string& device,
                  const std::vector<std::string>& tags, const std::string& as) {
  std::unique_ptr<Node> node;
  try {
    node = std::make_unique<Node>(load_serve_config(config_path));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const Principal* principal = node->credentials().find(as);
  if (!principal) {
    std::cerr << "unknown principal: " << as << '\n';
    return kExitConfig;
  }
  auto published = node->bus().publish(
      *principal, WireMessage{topic_for(device, std::nullopt, Channel::kTagsPush),
                              encode_admin_push(AdminPush{tags, std::nullopt}), 1, {}});
  if (!published) {
    std::cerr << "denied: " << published.reason << '\n';
    return kExitFailure;
  }
  node->report_all();
  auto applied = node->service().admin_tags().get(device);
  if (!applied) {
    std::cerr << "admin tags were not applied\n";
    return kExitFailure;
  }
  json out{{"device", device}, {"tags", applied->tags}, {"applied_at", applied->applied_at_ms}};
  if (auto doc = node->service().base_document(device)) {
    out["document"] = json::parse(encode_document(*doc));
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int run_twins(const std::string& config_path, const std::string& device,
              const std::string& input_path) {
  std::unique_ptr<Node> node;
  try {
    node = std::make_unique<Node>(load_serve_config(config_path));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  node->report_all();
  if (!input_path.empty()) {
    // Each line is a reported-update payload, published as the device.
    std::ifstream in(input_path);
    if (!in) {
      std::cerr << "cannot open " << input_path << '\n';
      return kExitConfig;
    }
    const Principal device_principal{device + "-cli", {}, {Role::kDevice}, device};
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      node->bus().publish(device_principal,
                          WireMessage{topic_for(device, std::nullopt, Channel::kUpdate), line, 1, {}});
      node->bus().run_until_idle();
    }
  }
  auto registry = node->service().twins(device);
  if (!registry) {
    std::cerr << "unknown device: " << device << '\n';
    return kExitFailure;
  }
  std::cout << json{{"device", device}, {"twins", twin_listing(*registry)}}.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinmesh: tag-partitioned device shadows for the local edge"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the shadow service; JSON-lines commands on stdin");
  serve->add_option("--config", config_path, "Service config file")->required();

  auto* bench = app.add_subcommand("bench", "Processing-time experiments");
  bench->require_subcommand(1);
  std::size_t max_pairs = 40, trials = 500;
  std::string out_path;
  std::string tags_list = "1,3,5";
  auto* dynamic = bench->add_subcommand("dynamic", "Pairs and tags per pair grow together");
  dynamic->add_option("--max-pairs", max_pairs)->capture_default_str();
  dynamic->add_option("--trials", trials)->capture_default_str();
  dynamic->add_option("--out", out_path, "CSV output path ('-' for stdout)");
  auto* stat = bench->add_subcommand("static", "Fixed tags per pair, growing pair count");
  stat->add_option("--tags", tags_list, "Comma-separated tags-per-pair series")->capture_default_str();
  stat->add_option("--max-pairs", max_pairs)->default_val(100);
  stat->add_option("--trials", trials)->capture_default_str();
  stat->add_option("--out", out_path, "CSV output path ('-' for stdout)");

  auto* admin = app.add_subcommand("admin", "Grants, admin tags and twin inspection");
  admin->require_subcommand(1);
  std::string policy_path, principal, device = "*", tag, action = "read";
  auto add_grant_options = [&](CLI::App* cmd) {
    cmd->add_option("--policy", policy_path, "Policy file to edit")->required();
    cmd->add_option("--principal", principal)->required();
    cmd->add_option("--device", device, "Device glob")->capture_default_str();
    cmd->add_option("--tag", tag, "Tag glob, or #base")->required();
    cmd->add_option("--action", action)->check(CLI::IsMember({"read", "write"}))->capture_default_str();
  };
  auto* grant_cmd = admin->add_subcommand("grant", "Add a grant to a policy file");
  add_grant_options(grant_cmd);
  auto* revoke_cmd = admin->add_subcommand("revoke", "Remove a grant from a policy file");
  add_grant_options(revoke_cmd);

  std::string push_tags, as_principal, target_device;
  auto* push_cmd = admin->add_subcommand("push-tags", "Push sticky admin tags through the base shadow");
  push_cmd->add_option("--config", config_path)->required();
  push_cmd->add_option("--device", target_device)->required();
  push_cmd->add_option("--tags", push_tags, "Comma-separated tags")->required();
  push_cmd->add_option("--as", as_principal, "Admin principal id")->required();

  std::string input_path;
  auto* twins_cmd = admin->add_subcommand("twins", "List a device's tag shadows");
  twins_cmd->add_option("--config", config_path)->required();
  twins_cmd->add_option("--device", target_device)->required();
  twins_cmd->add_option("--input", input_path, "Reported payloads, one JSON per line");

  std::string password;
  auto* hash_cmd = admin->add_subcommand("hash-password", "Print an Argon2id hash for a credentials file");
  hash_cmd->add_option("--password", password)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (*serve) return run_serve(config_path, std::cin, std::cout);
  if (*dynamic) return run_bench(true, max_pairs, trials, {}, out_path);
  if (*stat) {
    std::vector<int> tags;
    try {
      for (const auto& t : split_list(tags_list)) tags.push_back(std::stoi(t));
    } catch (const std::exception&) {
      std::cerr << "invalid --tags list: " << tags_list << '\n';
      return kExitConfig;
    }
    return run_bench(false, max_pairs, trials, tags, out_path);
  }
  if (*grant_cmd || *revoke_cmd) {
    Grant entry{principal, device, tag, *action_from_string(action)};
    return run_policy_edit(static_cast<bool>(*grant_cmd), policy_path, entry);
  }
  if (*push_cmd) return run_push_tags(config_path, target_device, split_list(push_tags), as_principal);
  if (*twins_cmd) return run_twins(config_path, target_device, input_path);
  if (*hash_cmd) {
    std::cout << hash_password(password) << '\n';
    return kExitOk;
  }
  return kExitFailure;
}
