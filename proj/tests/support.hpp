// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

// Random generators and brute-force oracles shared by the unit and
// acceptance tests. Oracles deliberately avoid the library's own helpers.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "twinmesh/scalar.hpp"
#include "twinmesh/shadow.hpp"

namespace twinmesh::testing {

inline std::string random_key(std::mt19937_64& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_./-";
  std::uniform_int_distribution<std::size_t> len(1, 12), pick(0, alphabet.size() - 1);
  std::string key;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) key += alphabet[pick(rng)];
  return key;
}

inline std::string random_tag(std::mt19937_64& rng, std::size_t pool = 0) {
  if (pool > 0) return "t" + std::to_string(std::uniform_int_distribution<std::size_t>(0, pool - 1)(rng));
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789_-";
  std::uniform_int_distribution<std::size_t> len(1, 10), pick(0, alphabet.size() - 1);
  std::string tag;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) tag += alphabet[pick(rng)];
  return tag;
}

// Mixed scalar types. A small value pool makes equal values common so delta
// tests exercise both branches.
inline Scalar random_scalar(std::mt19937_64& rng, bool small_pool = false) {
  std::uniform_int_distribution<int> kind(0, 4);
  if (small_pool) {
    switch (kind(rng)) {
      case 0: return Scalar(std::uniform_int_distribution<int>(0, 3)(rng));
      case 1: return Scalar(std::uniform_int_distribution<int>(0, 3)(rng) + 0.5);
      case 2: return Scalar(std::string(1, static_cast<char>('a' + std::uniform_int_distribution<int>(0, 2)(rng))));
      case 3: return Scalar(std::uniform_int_distribution<int>(0, 1)(rng) == 1);
      default: return Scalar(static_cast<double>(std::uniform_int_distribution<int>(0, 3)(rng)));
    }
  }
  switch (kind(rng)) {
    case 0: return Scalar(static_cast<long long>(std::uniform_int_distribution<std::int64_t>(-1'000'000'000'000, 1'000'000'000'000)(rng)));
    case 1: return Scalar(std::uniform_real_distribution<double>(-1e6, 1e6)(rng));
    case 2: {
      static const std::string chars = "abc XYZ\"\\/\n\t\x01\xc3\xa9";
      std::string s;
      for (int i = 0, n = std::uniform_int_distribution<int>(0, 8)(rng); i < n; ++i) {
        s += chars[std::uniform_int_distribution<std::size_t>(0, chars.size() - 1)(rng)];
      }
      // Keep UTF-8 valid: drop a dangling lead byte.
      std::string valid;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (static_cast<unsigned char>(s[i]) == 0xc3) {
          valid += "\xc3\xa9";
        } else if (static_cast<unsigned char>(s[i]) != 0xa9) {
          valid += s[i];
        }
      }
      return Scalar(valid);
    }
    case 3: return Scalar(std::uniform_int_distribution<int>(0, 1)(rng) == 1);
    default: return Scalar(std::uniform_real_distribution<double>(-1, 1)(rng) * 1e-300);
  }
}

inline std::vector<std::string> random_tags(std::mt19937_64& rng, std::size_t max_tags,
                                            std::size_t pool = 0) {
  std::vector<std::string> tags;
  std::set<std::string> seen;
  std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_tags)(rng);
  while (tags.size() < n) {
    auto t = random_tag(rng, pool);
    if (seen.insert(t).second) tags.push_back(t);
    if (pool > 0 && seen.size() >= pool) break;
  }
  return tags;
}

inline ReportedMap random_reported(std::mt19937_64& rng, std::size_t max_pairs, std::size_t max_tags,
                                   std::size_t tag_pool = 0, bool small_pool = false,
                                   std::size_t key_pool = 0) {
  ReportedMap out;
  std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_pairs)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::string key = key_pool > 0
                          ? "k" + std::to_string(std::uniform_int_distribution<std::size_t>(0, key_pool - 1)(rng))
                          : random_key(rng);
    out.insert_or_assign(key, TaggedValue{random_scalar(rng, small_pool), random_tags(rng, max_tags, tag_pool)});
  }
  return out;
}

inline ScalarMap random_desired(std::mt19937_64& rng, std::size_t max_keys, bool small_pool,
                                std::size_t key_pool) {
  ScalarMap out;
  std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_keys)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    out.insert_or_assign("k" + std::to_string(std::uniform_int_distribution<std::size_t>(0, key_pool - 1)(rng)),
                         random_scalar(rng, small_pool));
  }
  return out;
}

// Scalar equality as the data model defines it: numbers by exact value
// (integers and integral floats equal), strings byte-wise, booleans by value,
// different kinds never equal.
inline bool oracle_scalar_equal(const Scalar& a, const Scalar& b) {
  if (a.is_bool() || b.is_bool()) {
    return a.is_bool() && b.is_bool() && std::get<bool>(a.storage()) == std::get<bool>(b.storage());
  }
  if (a.is_string() || b.is_string()) {
    return a.is_string() && b.is_string() &&
           std::get<std::string>(a.storage()) == std::get<std::string>(b.storage());
  }
  auto exact = [](const Scalar& s) -> long double {
    if (s.is_integer()) return static_cast<long double>(std::get<std::int64_t>(s.storage()));
    return static_cast<long double>(std::get<double>(s.storage()));
  };
  return exact(a) == exact(b);
}

// Brute-force delta: walk every desired key, look it up by linear scan.
inline ScalarMap oracle_delta(const ReportedMap& reported, const ScalarMap& desired) {
  ScalarMap delta;
  for (const auto& [dk, dv] : desired) {
    bool matched = false;
    for (const auto& [rk, rv] : reported) {
      if (rk == dk) {
        matched = oracle_scalar_equal(rv.value, dv);
        break;
      }
    }
    if (!matched) delta.emplace(dk, dv);
  }
  return delta;
}

// Exhaustive membership: for every (pair, tag) combination decide
// independently whether the pair belongs to that tag's sub-document.
inline std::map<std::string, std::set<std::string>> oracle_partition(const ReportedMap& reported) {
  std::set<std::string> all_tags;
  for (const auto& [k, v] : reported) all_tags.insert(v.tags.begin(), v.tags.end());
  std::map<std::string, std::set<std::string>> out;
  for (const auto& tag : all_tags) {
    for (const auto& [k, v] : reported) {
      bool member = false;
      for (const auto& t : v.tags) member = member || t == tag;
      if (member) out[tag].insert(k);
    }
  }
  return out;
}

}  // namespace twinmesh::testing
