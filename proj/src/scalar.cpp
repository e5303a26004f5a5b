// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/scalar.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace twinmesh {
namespace {

// 2^63 is exactly representable; anything strictly below it in magnitude
// converts to int64 without overflow.
constexpr double kInt64Bound = 9223372036854775808.0;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Scalar::Scalar(double d) {
  if (!std::isfinite(d)) {
    throw std::invalid_argument("non-finite number is not a valid scalar");
  }
  if (std::trunc(d) == d && d > -kInt64Bound && d < kInt64Bound) {
    storage_ = static_cast<std::int64_t>(d);
  } else {
    storage_ = d;
  }
}

std::optional<double> Scalar::as_number() const {
  if (const auto* i = std::get_if<std::int64_t>(&storage_)) {
    return static_cast<double>(*i);
  }
  if (const auto* d = std::get_if<double>(&storage_)) return *d;
  return std::nullopt;
}

std::string Scalar::to_string() const {
  std::string out;
  append_json(out, *this);
  return out;
}

void to_json(nlohmann::json& j, const Scalar& s) {
  std::visit(overloaded{[&](bool b) { j = b; },
                        [&](std::int64_t i) { j = i; },
                        [&](double d) { j = d; },
                        [&](const std::string& str) { j = str; }},
             s.storage());
}

Scalar scalar_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::boolean:
      return Scalar(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
      return Scalar(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        return Scalar(static_cast<std::int64_t>(u));
      }
      return Scalar(static_cast<double>(u));
    }
    case nlohmann::json::value_t::number_float:
      return Scalar(j.get<double>());
    case nlohmann::json::value_t::string:
      return Scalar(j.get<std::string>());
    default:
      throw std::invalid_argument("expected number, string or boolean");
  }
}

void append_json_string(std::string& out, std::string_view s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          static constexpr char kHex[] = "0123456789abcdef";
          out += "\\u00";
          out.push_back(kHex[(c >> 4) & 0xf]);
          out.push_back(kHex[c & 0xf]);
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

void append_json(std::string& out, const Scalar& s) {
  std::visit(overloaded{[&](bool b) { out += b ? "true" : "false"; },
                        [&](std::int64_t i) { out += std::to_string(i); },
                        [&](double d) {
                          // Shortest representation that parses back exactly.
                          char buf[32];
                          auto res = std::to_chars(buf, buf + sizeof buf, d);
                          std::string_view text(buf, res.ptr - buf);
                          out += text;
                          // Keep the float marker so decoders see a number_float.
                          if (text.find_first_of(".eE") == std::string_view::npos) {
                            out += ".0";
                          }
                        },
                        [&](const std::string& str) { append_json_string(out, str); }},
             s.storage());
}

}  // namespace twinmesh
