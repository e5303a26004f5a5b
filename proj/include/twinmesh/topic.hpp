// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace twinmesh {

// Topic grammar (frozen external contract):
//   base   things/{device}/shadow/{channel}
//   named  things/{device}/shadow/name/{tag}/{channel}
//   admin  things/{device}/shadow/tags/push          (base only)
enum class Channel {
  kUpdate,
  kUpdateAccepted,
  kUpdateRejected,
  kUpdateDelta,
  kUpdateDocuments,
  kGet,
  kGetAccepted,
  kGetRejected,
  kTagsPush,
};

std::string_view channel_path(Channel channel);
std::optional<Channel> channel_from_path(std::string_view path);

/// True for channels only the shadow service publishes on.
bool is_response_channel(Channel channel);

/// Shadow name that addresses the base shadow in topic_for().
inline constexpr std::string_view kBaseShadowName = "base";

struct Topic {
  std::string device;
  std::optional<std::string> shadow_name;  // nullopt: base shadow
  Channel channel = Channel::kUpdate;

  bool is_base() const { return !shadow_name.has_value(); }

  friend bool operator==(const Topic&, const Topic&) = default;
};

class UnparsableTopic : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Device ids: [A-Za-z0-9_.:-]{1,128}.
bool is_valid_device_id(std::string_view device);

/// Renders a topic. `shadow_name` of "base" (or nullopt) selects the base
/// shadow. Throws UnparsableTopic for invalid components or tags/push on a
/// named shadow.
std::string topic_for(std::string_view device, std::optional<std::string_view> shadow_name,
                      Channel channel);
std::string render(const Topic& topic);

/// Throws UnparsableTopic.
Topic parse_topic(std::string_view topic);
std::optional<Topic> try_parse_topic(std::string_view topic);

// MQTT-style filters: `+` matches one level, a trailing `#` any remainder.
bool is_valid_filter(std::string_view filter);
bool filter_has_wildcards(std::string_view filter);
bool filter_matches(std::string_view filter, std::string_view topic);

}  // namespace twinmesh
