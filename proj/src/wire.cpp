// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/wire.hpp"

#include <nlohmann/json.hpp>

namespace twinmesh {
namespace {

using nlohmann::json;

void append_tagged(std::string& out, const TaggedValue& value) {
  out.push_back('[');
  append_json(out, value.value);
  out += ",[";
  for (std::size_t i = 0; i < value.tags.size(); ++i) {
    if (i) out.push_back(',');
    append_json_string(out, value.tags[i]);
  }
  out += "]]";
}

void append_reported(std::string& out, const ReportedMap& reported) {
  out.push_back('{');
  bool first = true;
  for (const auto& [key, value] : reported) {
    if (!first) out.push_back(',');
    first = false;
    append_json_string(out, key);
    out.push_back(':');
    append_tagged(out, value);
  }
  out.push_back('}');
}

void append_scalars(std::string& out, const ScalarMap& values) {
  out.push_back('{');
  bool first = true;
  for (const auto& [key, value] : values) {
    if (!first) out.push_back(',');
    first = false;
    append_json_string(out, key);
    out.push_back(':');
    append_json(out, value);
  }
  out.push_back('}');
}

std::string child(const std::string& path, std::string_view key) {
  return path + "." + std::string(key);
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

json parse_json(std::string_view bytes) {
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw SchemaViolation(".", std::string("invalid JSON: ") + e.what());
  }
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaViolation(path, "expected object");
  return j;
}

Scalar decode_scalar(const json& j, const std::string& path) {
  try {
    return scalar_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw SchemaViolation(path, e.what());
  }
}

void check_key(const std::string& key, const std::string& path) {
  if (!is_valid_key(key)) throw SchemaViolation(path, "invalid key");
}

std::vector<std::string> decode_tag_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaViolation(path, "expected tag array");
  std::vector<std::string> tags;
  tags.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw SchemaViolation(index(path, i), "expected tag string");
    tags.push_back(j[i].get<std::string>());
  }
  return tags;
}

TaggedValue decode_tagged(const json& j, const std::string& path, bool normalize) {
  if (!j.is_array() || j.size() != 2) throw SchemaViolation(path, "expected [value, [tags]]");
  TaggedValue out{decode_scalar(j[0], index(path, 0)), decode_tag_array(j[1], index(path, 1))};
  if (normalize) {
    auto tags = normalize_tags(out.tags);
    if (!tags) {
      std::size_t bad = 0;
      while (bad < out.tags.size() && normalize_tags(std::span(&out.tags[bad], 1))) ++bad;
      throw SchemaViolation(index(index(path, 1), bad), "invalid tag");
    }
    out.tags = std::move(*tags);
  }
  return out;
}

ReportedMap decode_reported(const json& j, const std::string& path) {
  require_object(j, path);
  ReportedMap out;
  for (const auto& [key, value] : j.items()) {
    auto p = child(path, key);
    check_key(key, p);
    out.emplace(key, decode_tagged(value, p, true));
  }
  return out;
}

ScalarMap decode_scalars(const json& j, const std::string& path) {
  require_object(j, path);
  ScalarMap out;
  for (const auto& [key, value] : j.items()) {
    auto p = child(path, key);
    check_key(key, p);
    out.emplace(key, decode_scalar(value, p));
  }
  return out;
}

template <class T>
std::optional<T> optional_integer(const json& root, const char* field) {
  auto it = root.find(field);
  if (it == root.end()) return std::nullopt;
  bool ok = std::is_signed_v<T> ? it->is_number_integer() : it->is_number_unsigned();
  if (!ok) throw SchemaViolation(std::string(".") + field, "expected integer");
  return it->template get<T>();
}

}  // namespace

std::string encode_document(const ShadowDocument& doc) {
  std::string out;
  out.reserve(64 + doc.reported.size() * 48);
  out += R"({"state":{"reported":)";
  append_reported(out, doc.reported);
  out += R"(,"desired":)";
  append_scalars(out, doc.desired);
  out += R"(,"delta":)";
  append_scalars(out, doc.delta);
  out += R"(},"version":)";
  out += std::to_string(doc.version);
  out += R"(,"timestamp":)";
  out += std::to_string(doc.timestamp_ms);
  out.push_back('}');
  return out;
}

ShadowDocument decode_document(std::string_view bytes) {
  json root = parse_json(bytes);
  require_object(root, ".");
  auto state_it = root.find("state");
  if (state_it == root.end()) throw SchemaViolation(".state", "missing");
  const json& state = require_object(*state_it, ".state");

  ShadowDocument doc;
  if (auto it = state.find("reported"); it != state.end()) {
    doc.reported = decode_reported(*it, ".state.reported");
  }
  if (auto it = state.find("desired"); it != state.end()) {
    doc.desired = decode_scalars(*it, ".state.desired");
  }
  if (auto it = state.find("delta"); it != state.end()) {
    doc.delta = decode_scalars(*it, ".state.delta");
  }
  doc.version = optional_integer<std::uint64_t>(root, "version").value_or(0);
  doc.timestamp_ms = optional_integer<std::int64_t>(root, "timestamp").value_or(0);
  return doc;
}

std::string encode_subdocument(const SubDocument& sub) {
  std::string out = R"({"state":{"reported":)";
  append_reported(out, sub.pairs);
  out += R"(},"tag":)";
  append_json_string(out, sub.tag);
  out += R"(,"source_version":)";
  out += std::to_string(sub.source_version);
  out.push_back('}');
  return out;
}

SubDocument decode_subdocument(std::string_view bytes) {
  json root = parse_json(bytes);
  require_object(root, ".");
  SubDocument sub;
  auto tag = root.find("tag");
  if (tag == root.end() || !tag->is_string()) throw SchemaViolation(".tag", "expected string");
  sub.tag = tag->get<std::string>();
  if (!is_valid_tag(sub.tag)) throw SchemaViolation(".tag", "invalid tag");
  auto state = root.find("state");
  if (state == root.end()) throw SchemaViolation(".state", "missing");
  require_object(*state, ".state");
  if (auto it = state->find("reported"); it != state->end()) {
    sub.pairs = decode_reported(*it, ".state.reported");
  }
  for (const auto& [key, value] : sub.pairs) {
    if (!value.has_tag(sub.tag)) {
      throw SchemaViolation(".state.reported." + key, "pair does not carry tag " + sub.tag);
    }
  }
  sub.source_version = optional_integer<std::uint64_t>(root, "source_version").value_or(0);
  return sub;
}

std::string encode_twin(std::string_view tag, const TwinEntry& twin) {
  std::string out = encode_document(twin.shadow);
  out.pop_back();
  out += R"(,"tag":)";
  append_json_string(out, tag);
  out += R"(,"forwarded":)";
  append_scalars(out, twin.forwarded_desired);
  out.push_back('}');
  return out;
}

std::string encode_update(const UpdateRequest& request) {
  json state = json::object();
  if (request.reported) {
    json reported = json::object();
    for (const auto& [key, entry] : *request.reported) {
      reported[key] = entry ? to_json(*entry) : json(nullptr);
    }
    state["reported"] = std::move(reported);
  }
  if (request.desired) {
    json desired = json::object();
    for (const auto& [key, entry] : *request.desired) {
      desired[key] = entry ? json(*entry) : json(nullptr);
    }
    state["desired"] = std::move(desired);
  }
  json root{{"state", std::move(state)}};
  if (request.version) root["version"] = *request.version;
  if (request.client_token) root["clientToken"] = *request.client_token;
  return root.dump();
}

UpdateRequest decode_update(std::string_view bytes) {
  json root = parse_json(bytes);
  require_object(root, ".");
  auto state_it = root.find("state");
  if (state_it == root.end()) throw SchemaViolation(".state", "missing");
  const json& state = require_object(*state_it, ".state");

  UpdateRequest request;
  if (auto it = state.find("reported"); it != state.end()) {
    require_object(*it, ".state.reported");
    ReportedUpdate reported;
    for (const auto& [key, value] : it->items()) {
      auto p = child(".state.reported", key);
      if (value.is_null()) {
        reported.emplace(key, std::nullopt);
      } else {
        // Tag validation belongs to the shadow so it can emit a rejection.
        reported.emplace(key, decode_tagged(value, p, false));
      }
    }
    request.reported = std::move(reported);
  }
  if (auto it = state.find("desired"); it != state.end()) {
    require_object(*it, ".state.desired");
    DesiredUpdate desired;
    for (const auto& [key, value] : it->items()) {
      auto p = child(".state.desired", key);
      if (value.is_null()) {
        desired.emplace(key, std::nullopt);
      } else {
        desired.emplace(key, decode_scalar(value, p));
      }
    }
    request.desired = std::move(desired);
  }
  request.version = optional_integer<std::uint64_t>(root, "version");
  if (auto it = root.find("clientToken"); it != root.end()) {
    if (!it->is_string()) throw SchemaViolation(".clientToken", "expected string");
    request.client_token = it->get<std::string>();
  }
  return request;
}

std::string encode_delta(const ScalarMap& delta, std::uint64_t version, std::int64_t timestamp_ms) {
  std::string out = R"({"state":)";
  append_scalars(out, delta);
  out += R"(,"version":)";
  out += std::to_string(version);
  out += R"(,"timestamp":)";
  out += std::to_string(timestamp_ms);
  out.push_back('}');
  return out;
}

ScalarMap decode_delta(std::string_view bytes) {
  json root = parse_json(bytes);
  require_object(root, ".");
  auto state = root.find("state");
  if (state == root.end()) throw SchemaViolation(".state", "missing");
  return decode_scalars(*state, ".state");
}

AdminPush decode_admin_push(std::string_view bytes) {
  json root = parse_json(bytes);
  require_object(root, ".");
  AdminPush push;
  if (auto it = root.find("tags"); it != root.end()) push.tags = decode_tag_array(*it, ".tags");
  if (auto it = root.find("rules"); it != root.end()) {
    if (!it->is_array()) throw SchemaViolation(".rules", "expected array");
    push.rules = json{{"rules", *it}};
  }
  if (!push.tags && !push.rules) throw SchemaViolation(".", "expected \"tags\" or \"rules\"");
  return push;
}

std::string encode_admin_push(const AdminPush& push) {
  json root = json::object();
  if (push.tags) root["tags"] = *push.tags;
  if (push.rules) root["rules"] = push.rules->contains("rules") ? (*push.rules)["rules"] : *push.rules;
  return root.dump();
}

void validate_wire_message(const WireMessage& message) {
  if (message.qos != 0 && message.qos != 1) throw std::invalid_argument("qos must be 0 or 1");
  if (message.payload.size() > kMaxPayloadBytes) {
    throw std::invalid_argument("payload exceeds 256 KiB");
  }
  if (!json::accept(message.payload)) throw std::invalid_argument("payload is not valid JSON");
}

}  // namespace twinmesh
