// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "twinmesh/router.hpp"
#include "twinmesh/shadow.hpp"
#include "twinmesh/topic.hpp"

namespace twinmesh {

inline constexpr std::size_t kMaxPayloadBytes = 256 * 1024;

struct WireMessage {
  std::string topic;
  std::string payload;  // UTF-8 JSON
  int qos = 1;
  // Relay that injected the message (e.g. a broker bridge); empty for local
  // publishers. Lets relays avoid echoing their own traffic.
  std::string origin;
};

/// Payload that does not match the document schema. `path()` locates the
/// first offending node, e.g. `.state.reported.tp_ps[1]`.
class SchemaViolation : public std::invalid_argument {
 public:
  SchemaViolation(std::string path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Canonical form (byte-stable: equal documents encode identically):
//   {"state":{"reported":{"k":[v,["t1","t2"]]},"desired":{"k":v},"delta":{"k":v}},
//    "version":n,"timestamp":ms}
// Keys inside each subgroup are sorted; no whitespace.
std::string encode_document(const ShadowDocument& doc);

/// Decodes a document; tolerant of key order and unknown envelope fields.
/// Throws SchemaViolation.
ShadowDocument decode_document(std::string_view bytes);

// {"state":{"reported":{...}},"tag":"t","source_version":n}
std::string encode_subdocument(const SubDocument& sub);
SubDocument decode_subdocument(std::string_view bytes);

/// Tag shadow state as served on its `get/accepted` and `update/documents`
/// channels: the document encoding plus "tag" and a "forwarded" object with
/// the desired writes relayed to the base shadow.
std::string encode_twin(std::string_view tag, const TwinEntry& twin);

/// Body of a publish on an `update` channel.
struct UpdateRequest {
  std::optional<ReportedUpdate> reported;
  std::optional<DesiredUpdate> desired;
  std::optional<std::uint64_t> version;
  std::optional<std::string> client_token;
};

// {"state":{"reported":{"k":[v,[tags]]|null},"desired":{"k":v|null}},"version":n,"clientToken":"..."}
std::string encode_update(const UpdateRequest& request);
UpdateRequest decode_update(std::string_view bytes);

// Delta channel: {"state":{"k":v},"version":n,"timestamp":ms}
std::string encode_delta(const ScalarMap& delta, std::uint64_t version, std::int64_t timestamp_ms);
ScalarMap decode_delta(std::string_view bytes);

/// Admin channel body: {"tags":[...]} to replace sticky tags and/or
/// {"rules":[...]} to reload the tag rules.
struct AdminPush {
  std::optional<std::vector<std::string>> tags;
  std::optional<nlohmann::json> rules;
};
AdminPush decode_admin_push(std::string_view bytes);
std::string encode_admin_push(const AdminPush& push);

/// Throws std::invalid_argument for payloads over kMaxPayloadBytes, invalid
/// JSON, or a QoS other than 0 or 1.
void validate_wire_message(const WireMessage& message);

}  // namespace twinmesh
