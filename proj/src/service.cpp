// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/service.hpp"

#include "twinmesh/wire.hpp"

namespace twinmesh {
namespace {

constexpr std::size_t kMaxDiagnostics = 1024;

Topic on_channel(const Topic& topic, Channel channel) {
  return Topic{topic.device, topic.shadow_name, channel};
}

Channel rejection_channel(Channel request) {
  return request == Channel::kGet ? Channel::kGetRejected : Channel::kUpdateRejected;
}

std::string with_token(nlohmann::json payload, const std::optional<std::string>& token) {
  if (token) payload["clientToken"] = *token;
  return payload.dump();
}

std::size_t count_tags(const ReportedMap& reported) {
  std::size_t n = 0;
  for (const auto& [key, value] : reported) n += value.tags.size();
  return n;
}

}  // namespace

std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

ShadowService::ShadowService(MessageBus& bus, std::shared_ptr<AccessController> access,
                             ServiceOptions options)
    : bus_(bus),
      access_(std::move(access)),
      options_(std::move(options)),
      principal_{"twinmesh-shadow-service", {}, {Role::kAdmin}, std::nullopt} {
  if (!options_.clock) options_.clock = wall_clock_ms;
}

ShadowService::~ShadowService() {
  for (auto id : subscriptions_) bus_.unsubscribe(id);
}

void ShadowService::start() {
  static constexpr const char* kFilters[] = {
      "things/+/shadow/update",         "things/+/shadow/get",
      "things/+/shadow/tags/push",      "things/+/shadow/name/+/update",
      "things/+/shadow/name/+/get",
  };
  for (const char* filter : kFilters) {
    auto sub = bus_.subscribe(principal_, filter, [this](const Delivery& d) {
      handle(d.message, d.sender);
      return true;
    });
    if (sub) subscriptions_.push_back(sub.id);
  }
}

void ShadowService::set_processing_observer(std::function<void(const ProcessingSample&)> observer) {
  std::lock_guard lock(mu_);
  observer_ = std::move(observer);
}

ShadowService::DeviceState& ShadowService::state_for(const std::string& device) {
  auto it = devices_.find(device);
  if (it == devices_.end()) {
    it = devices_.emplace(device, DeviceState(device, options_.max_twins_per_device)).first;
  }
  return it->second;
}

void ShadowService::publish(const Topic& topic, std::string payload) {
  bus_.publish(principal_, WireMessage{render(topic), std::move(payload), options_.qos, {}});
}

void ShadowService::reject(const Topic& topic, int code, const std::string& message,
                           const std::optional<std::string>& token) {
  Topic target = topic.channel == Channel::kTagsPush
                     ? Topic{topic.device, std::nullopt, Channel::kUpdateRejected}
                     : on_channel(topic, rejection_channel(topic.channel));
  publish(target, with_token({{"code", code}, {"message", message}}, token));
}

void ShadowService::handle(const WireMessage& message, const Principal& sender) {
  auto topic = try_parse_topic(message.topic);
  if (!topic) return;
  std::lock_guard lock(mu_);
  switch (topic->channel) {
    case Channel::kUpdate:
      if (topic->is_base()) {
        handle_base_update(*topic, message.payload);
      } else {
        handle_named_update(*topic, message.payload);
      }
      break;
    case Channel::kGet:
      handle_get(*topic, message.payload);
      break;
    case Channel::kTagsPush:
      handle_admin(*topic, message.payload, sender);
      break;
    default:
      break;
  }
}

void ShadowService::publish_base_events(const Topic& request,
                                        const std::vector<ShadowEvent>& events,
                                        const DeviceState& state,
                                        const std::optional<std::string>& token) {
  Topic base{request.device, std::nullopt, Channel::kUpdate};
  for (const auto& ev : events) {
    switch (ev.kind) {
      case EventKind::kAccepted:
        publish(on_channel(base, Channel::kUpdateAccepted), with_token(ev.payload, token));
        break;
      case EventKind::kRejected:
        publish(on_channel(base, Channel::kUpdateRejected), with_token(ev.payload, token));
        break;
      case EventKind::kDeltaPublished:
        publish(on_channel(base, Channel::kUpdateDelta),
                encode_delta(state.base.delta, state.base.version, state.base.timestamp_ms));
        break;
      case EventKind::kDocumentsChanged:
        publish(on_channel(base, Channel::kUpdateDocuments), encode_document(state.base));
        break;
      case EventKind::kResolved:
        break;
    }
  }
}

void ShadowService::handle_base_update(const Topic& topic, std::string_view payload) {
  const auto started = std::chrono::steady_clock::now();
  UpdateRequest request;
  try {
    request = decode_update(payload);
  } catch (const SchemaViolation& e) {
    reject(topic, 400, e.what());
    return;
  }
  DeviceState& state = state_for(topic.device);
  const std::int64_t now = options_.clock();

  if (request.reported) {
    auto rules = rules_.snapshot();
    auto admin = admin_tags_.tags_for(topic.device);
    ReportedUpdate tagged;
    for (auto& [key, entry] : *request.reported) {
      if (!entry) {
        tagged.emplace_hint(tagged.end(), key, std::nullopt);
        continue;
      }
      if (rules->empty() && admin.empty()) {
        tagged.emplace_hint(tagged.end(), key, std::move(entry));
        continue;
      }
      auto evaluation = evaluate_rules(key, entry->value, *rules);
      for (auto& diag : evaluation.diagnostics) {
        if (diagnostics_.size() >= kMaxDiagnostics) diagnostics_.erase(diagnostics_.begin());
        diagnostics_.push_back(std::move(diag));
      }
      tagged.emplace_hint(
          tagged.end(), key,
          TaggedValue{entry->value, effective_tags(entry->tags, evaluation.tags, admin)});
    }

    MutationContext ctx{ShadowId{topic.device, std::nullopt}, now, request.version};
    std::optional<ShadowError> error;
    auto events = apply_reported_in_place(state.base, tagged, ctx, &error);
    publish_base_events(topic, events, state, request.client_token);

    if (!error) {
      // Route the normalized pairs as stored in the base shadow.
      ReportedUpdate message;
      for (const auto& [key, entry] : tagged) {
        auto it = entry ? state.base.reported.find(key) : state.base.reported.end();
        if (it != state.base.reported.end()) {
          message.emplace_hint(message.end(), key, it->second);
        } else {
          message.emplace_hint(message.end(), key, std::nullopt);
        }
      }
      auto twin_events =
          route(parse_tags(message, state.base.version), state.twins, RouteContext{now, &message});
      for (const auto& ev : twin_events) {
        Topic named{topic.device, ev.shadow.tag, Channel::kUpdate};
        if (ev.kind == EventKind::kDocumentsChanged) {
          if (const TwinEntry* twin = state.twins.find(*ev.shadow.tag)) {
            publish(on_channel(named, Channel::kUpdateDocuments), encode_twin(*ev.shadow.tag, *twin));
          }
        } else if (ev.kind == EventKind::kRejected) {
          publish(on_channel(named, Channel::kUpdateRejected), ev.payload.dump());
        }
      }
      if (observer_) {
        observer_(ProcessingSample{topic.device, state.base.reported.size(),
                                   count_tags(state.base.reported),
                                   std::chrono::steady_clock::now() - started});
      }
    }
  }

  if (request.desired) {
    MutationContext ctx{ShadowId{topic.device, std::nullopt}, now,
                        request.reported ? std::nullopt : request.version};
    auto events = apply_desired_in_place(state.base, *request.desired, ctx);
    publish_base_events(topic, events, state, request.client_token);
  }
}

void ShadowService::handle_named_update(const Topic& topic, std::string_view payload) {
  UpdateRequest request;
  try {
    request = decode_update(payload);
  } catch (const SchemaViolation& e) {
    reject(topic, 400, e.what());
    return;
  }
  if (request.reported) {
    reject(topic, 403, "tag shadows are written by the base shadow only", request.client_token);
    return;
  }
  if (!request.desired) {
    reject(topic, 400, "update carries no desired state", request.client_token);
    return;
  }
  auto it = devices_.find(topic.device);
  if (it == devices_.end()) {
    reject(topic, 404, "unknown device " + topic.device, request.client_token);
    return;
  }
  DeviceState& state = it->second;
  const std::int64_t now = options_.clock();
  auto forwarded = forward_desired(state.twins, *topic.shadow_name, *request.desired, now);
  if (!forwarded.accepted) {
    reject(topic, 400, forwarded.reason, request.client_token);
    return;
  }
  MutationContext ctx{ShadowId{topic.device, std::nullopt}, now, std::nullopt};
  std::optional<ShadowError> error;
  auto events = apply_desired_in_place(state.base, forwarded.forward, ctx, &error);
  publish_base_events(topic, events, state, std::nullopt);
  if (error) {
    reject(topic, 400, error->message, request.client_token);
    return;
  }
  nlohmann::json desired = nlohmann::json::object();
  for (const auto& [key, value] : forwarded.forward) {
    desired[key] = value ? nlohmann::json(*value) : nlohmann::json(nullptr);
  }
  publish(on_channel(topic, Channel::kUpdateAccepted),
          with_token({{"state", {{"desired", std::move(desired)}}},
                      {"forwarded", true},
                      {"version", state.base.version},
                      {"timestamp", state.base.timestamp_ms}},
                     request.client_token));
  if (const TwinEntry* twin = state.twins.find(*topic.shadow_name)) {
    publish(on_channel(topic, Channel::kUpdateDocuments), encode_twin(*topic.shadow_name, *twin));
  }
}

void ShadowService::handle_get(const Topic& topic, std::string_view) {
  auto it = devices_.find(topic.device);
  if (it == devices_.end()) {
    reject(topic, 404, "unknown device " + topic.device);
    return;
  }
  DeviceState& state = it->second;
  if (topic.is_base()) {
    publish(on_channel(topic, Channel::kGetAccepted), encode_document(state.base));
    return;
  }
  if (!state.twins.find(*topic.shadow_name)) {
    reject(topic, 404, "no tag shadow " + *topic.shadow_name);
    return;
  }
  // A read wakes a dormant twin.
  TwinEntry* twin = ensure_twin(state.twins, *topic.shadow_name, options_.clock());
  publish(on_channel(topic, Channel::kGetAccepted), encode_twin(*topic.shadow_name, *twin));
}

void ShadowService::handle_admin(const Topic& topic, std::string_view payload,
                                 const Principal& sender) {
  AdminPush push;
  try {
    push = decode_admin_push(payload);
  } catch (const SchemaViolation& e) {
    reject(topic, 400, e.what());
    return;
  }
  auto policy = access_->snapshot();
  if (push.tags) {
    auto result = admin_tags_.push(topic.device, *push.tags, sender, *policy, options_.clock());
    if (!result.ok()) {
      reject(topic, result.error == AdminTagError::kUnauthorized ? 403 : 400, result.reason);
      return;
    }
  }
  if (push.rules) {
    if (!authorize(*policy, sender, Action::kWrite, topic)) {
      reject(topic, 403, "rule reload requires the admin role");
      return;
    }
    try {
      rules_.replace(rules_from_json(*push.rules));
    } catch (const std::exception& e) {
      reject(topic, 400, std::string("invalid rules: ") + e.what());
    }
  }
}

std::optional<ShadowDocument> ShadowService::base_document(std::string_view device) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device);
  if (it == devices_.end()) return std::nullopt;
  return get_document(it->second.base);
}

std::optional<TwinRegistry> ShadowService::twins(std::string_view device) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device);
  if (it == devices_.end()) return std::nullopt;
  return it->second.twins;
}

std::vector<std::string> ShadowService::devices() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, state] : devices_) out.push_back(id);
  return out;
}

std::vector<RuleDiagnostic> ShadowService::diagnostics() const {
  std::lock_guard lock(mu_);
  return diagnostics_;
}

std::size_t ShadowService::reap_idle_twins() {
  std::lock_guard lock(mu_);
  std::size_t reaped = 0;
  const std::int64_t now = options_.clock();
  for (auto& [id, state] : devices_) reaped += reap_idle(state.twins, now, options_.idle_threshold_ms);
  return reaped;
}

void ShadowService::reset(std::string_view device) {
  std::lock_guard lock(mu_);
  if (auto it = devices_.find(device); it != devices_.end()) devices_.erase(it);
}

void ShadowService::reset_all() {
  std::lock_guard lock(mu_);
  devices_.clear();
  diagnostics_.clear();
}

}  // namespace twinmesh
