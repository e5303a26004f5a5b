// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace twinmesh {

enum class Experiment { kDynamic, kStatic };

std::string_view to_string(Experiment experiment);

struct TrialRecord {
  Experiment experiment = Experiment::kDynamic;
  std::optional<int> tags_per_pair;  // static only
  std::size_t pair_count = 0;
  std::int64_t processing_ns = 0;
  std::size_t trial_index = 0;
  std::size_t tag_attachments = 0;
};

struct SummaryPoint {
  Experiment experiment = Experiment::kDynamic;
  std::optional<int> tags_per_pair;
  std::size_t pair_count = 0;
  double mean_ms = 0;
  double ci99_low_ms = 0;
  double ci99_high_ms = 0;
  std::size_t n = 0;

  friend bool operator==(const SummaryPoint&, const SummaryPoint&) = default;
};

struct BenchOptions {
  std::size_t max_pairs = 40;
  std::size_t trials = 500;
  // Untimed trials run first to warm allocators and caches.
  std::size_t warmup_trials = 1;
  // After every step, check the tag-attachment count and that every tag
  // shadow holds exactly the pairs carrying its tag.
  bool verify_state = true;
  std::function<void(const std::string&)> log;
};

struct BenchResult {
  std::vector<TrialRecord> records;
  std::size_t aborted_trials = 0;
  std::size_t verification_failures = 0;
};

/// Pairs and tags grow together: step k holds k pairs with k tags each.
/// After each report the shadow adds one pair, appends one tag to every
/// existing pair and pushes new desired values for all of them.
BenchResult run_dynamic_scaling(const BenchOptions& options);

/// One series per entry of `tags_per_pair`: pairs grow from 0 to
/// `max_pairs`, each carrying that many tags.
BenchResult run_static_scaling(std::span<const int> tags_per_pair, const BenchOptions& options);

/// Two-sided Student's t quantile, e.g. p = 0.995 for a 99% interval.
double student_t_quantile(double p, double degrees_of_freedom);

/// Mean and 99% Student-t interval per (experiment, tags_per_pair,
/// pair_count), in that order. Points with fewer than two records are
/// skipped and reported through `warnings`.
std::vector<SummaryPoint> summarize(std::span<const TrialRecord> records,
                                    std::vector<std::string>* warnings = nullptr);

inline constexpr std::string_view kCsvHeader =
    "experiment,tags_per_pair,pair_count,mean_ms,ci99_low_ms,ci99_high_ms,n";

std::string to_csv(std::span<const SummaryPoint> summaries);
/// Throws std::runtime_error if the file cannot be written.
void emit_csv(std::span<const SummaryPoint> summaries, const std::filesystem::path& path);
/// Throws std::runtime_error on malformed rows.
std::vector<SummaryPoint> parse_csv(std::string_view text);

}  // namespace twinmesh
