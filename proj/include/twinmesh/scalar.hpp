// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace twinmesh {

/// A sensor or desired-state value: number, string or boolean.
///
/// Numbers are canonicalized on construction: any double holding an integral
/// value that fits in int64 is stored as an integer, so `Scalar(60)` and
/// `Scalar(60.0)` compare equal and encode identically. Non-finite numbers
/// are not representable and throw std::invalid_argument.
class Scalar {
 public:
  using Storage = std::variant<bool, std::int64_t, double, std::string>;

  Scalar() : storage_(std::int64_t{0}) {}
  Scalar(bool b) : storage_(b) {}
  Scalar(int i) : storage_(std::int64_t{i}) {}
  Scalar(long i) : storage_(static_cast<std::int64_t>(i)) {}
  Scalar(long long i) : storage_(static_cast<std::int64_t>(i)) {}
  Scalar(double d);
  Scalar(std::string s) : storage_(std::move(s)) {}
  Scalar(std::string_view s) : storage_(std::string(s)) {}
  Scalar(const char* s) : storage_(std::string(s)) {}

  bool is_bool() const { return std::holds_alternative<bool>(storage_); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(storage_); }
  bool is_number() const {
    return is_integer() || std::holds_alternative<double>(storage_);
  }
  bool is_string() const { return std::holds_alternative<std::string>(storage_); }

  /// Numeric view; nullopt for strings and booleans.
  std::optional<double> as_number() const;

  const Storage& storage() const { return storage_; }

  /// Human-readable form used in diagnostics and CLI output.
  std::string to_string() const;

  friend bool operator==(const Scalar&, const Scalar&) = default;

 private:
  Storage storage_;
};

void to_json(nlohmann::json& j, const Scalar& s);

/// Converts a JSON scalar. Throws std::invalid_argument for null, arrays,
/// objects and numbers that cannot be represented.
Scalar scalar_from_json(const nlohmann::json& j);

/// Appends the canonical JSON text of `s` to `out`.
void append_json(std::string& out, const Scalar& s);

/// Appends `s` as a JSON string literal.
void append_json_string(std::string& out, std::string_view s);

}  // namespace twinmesh
