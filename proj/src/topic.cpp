// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/topic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>
#include <vector>

#include "twinmesh/shadow.hpp"

namespace twinmesh {
namespace {

constexpr std::array<std::pair<Channel, std::string_view>, 9> kChannels{{
    {Channel::kUpdate, "update"},
    {Channel::kUpdateAccepted, "update/accepted"},
    {Channel::kUpdateRejected, "update/rejected"},
    {Channel::kUpdateDelta, "update/delta"},
    {Channel::kUpdateDocuments, "update/documents"},
    {Channel::kGet, "get"},
    {Channel::kGetAccepted, "get/accepted"},
    {Channel::kGetRejected, "get/rejected"},
    {Channel::kTagsPush, "tags/push"},
}};

constexpr std::string_view kPrefix = "things/";
constexpr std::string_view kShadowSegment = "/shadow/";
constexpr std::string_view kNamedSegment = "name/";

std::vector<std::string_view> split_levels(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find('/', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string_view channel_path(Channel channel) {
  for (const auto& [c, path] : kChannels) {
    if (c == channel) return path;
  }
  return {};
}

std::optional<Channel> channel_from_path(std::string_view path) {
  for (const auto& [c, p] : kChannels) {
    if (p == path) return c;
  }
  return std::nullopt;
}

bool is_response_channel(Channel channel) {
  switch (channel) {
    case Channel::kUpdate:
    case Channel::kGet:
    case Channel::kTagsPush:
      return false;
    default:
      return true;
  }
}

bool is_valid_device_id(std::string_view device) {
  return !device.empty() && device.size() <= 128 &&
         std::all_of(device.begin(), device.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
                  c == ':' || c == '-';
         });
}

std::string topic_for(std::string_view device, std::optional<std::string_view> shadow_name,
                      Channel channel) {
  if (!is_valid_device_id(device)) {
    throw UnparsableTopic("invalid device id: " + std::string(device));
  }
  bool base = !shadow_name || *shadow_name == kBaseShadowName;
  std::string out;
  out.reserve(64);
  out += kPrefix;
  out += device;
  out += kShadowSegment;
  if (!base) {
    if (!is_valid_tag(*shadow_name)) {
      throw UnparsableTopic("invalid shadow name: " + std::string(*shadow_name));
    }
    if (channel == Channel::kTagsPush) {
      throw UnparsableTopic("tags/push is only available on the base shadow");
    }
    out += kNamedSegment;
    out += *shadow_name;
    out += '/';
  }
  out += channel_path(channel);
  return out;
}

std::string render(const Topic& topic) {
  return topic_for(topic.device,
                   topic.shadow_name ? std::optional<std::string_view>(*topic.shadow_name)
                                     : std::nullopt,
                   topic.channel);
}

std::optional<Topic> try_parse_topic(std::string_view topic) {
  if (!topic.starts_with(kPrefix)) return std::nullopt;
  std::string_view rest = topic.substr(kPrefix.size());
  auto shadow_pos = rest.find('/');
  if (shadow_pos == std::string_view::npos) return std::nullopt;
  std::string_view device = rest.substr(0, shadow_pos);
  if (!is_valid_device_id(device)) return std::nullopt;
  rest = rest.substr(shadow_pos);
  if (!rest.starts_with(kShadowSegment)) return std::nullopt;
  rest = rest.substr(kShadowSegment.size());

  Topic out;
  out.device = std::string(device);
  if (rest.starts_with(kNamedSegment)) {
    rest = rest.substr(kNamedSegment.size());
    auto slash = rest.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    std::string_view name = rest.substr(0, slash);
    if (!is_valid_tag(name) || name == kBaseShadowName) return std::nullopt;
    out.shadow_name = std::string(name);
    rest = rest.substr(slash + 1);
  }
  auto channel = channel_from_path(rest);
  if (!channel) return std::nullopt;
  if (*channel == Channel::kTagsPush && out.shadow_name) return std::nullopt;
  out.channel = *channel;
  return out;
}

Topic parse_topic(std::string_view topic) {
  if (auto parsed = try_parse_topic(topic)) return std::move(*parsed);
  throw UnparsableTopic("unparsable topic: " + std::string(topic));
}

bool is_valid_filter(std::string_view filter) {
  if (filter.empty()) return false;
  auto levels = split_levels(filter);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    auto level = levels[i];
    if (level.find_first_of("+#") == std::string_view::npos) continue;
    if (level == "+") continue;
    if (level == "#" && i + 1 == levels.size()) continue;
    return false;
  }
  return true;
}

bool filter_has_wildcards(std::string_view filter) {
  return filter.find_first_of("+#") != std::string_view::npos;
}

bool filter_matches(std::string_view filter, std::string_view topic) {
  auto f = split_levels(filter);
  auto t = split_levels(topic);
  std::size_t i = 0;
  for (; i < f.size(); ++i) {
    if (f[i] == "#") return true;
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return i == t.size();
}

}  // namespace twinmesh
