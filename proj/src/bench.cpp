// Copyright 2026 The TwinMesh Authors
// SPDX-License-Identifier: Apache-2.0

#include "twinmesh/bench.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "twinmesh/bus.hpp"
#include "twinmesh/device.hpp"
#include "twinmesh/router.hpp"
#include "twinmesh/service.hpp"
#include "twinmesh/wire.hpp"

namespace twinmesh {
namespace {

constexpr std::string_view kBenchDevice = "bench-device";

std::string pair_key(std::size_t i) { return "key_" + std::to_string(i); }
std::string tag_name(std::size_t i) { return "tag_" + std::to_string(i); }

std::size_t count_tags(const ShadowDocument& doc) {
  std::size_t n = 0;
  for (const auto& [key, value] : doc.reported) n += value.tags.size();
  return n;
}

// Every twin holds exactly the base pairs carrying its tag, and nothing else.
bool partition_holds(const ShadowDocument& base, const TwinRegistry& twins) {
  auto expected = parse_tags(base.reported);
  for (const auto& [tag, sub] : expected) {
    const TwinEntry* twin = twins.find(tag);
    if (!twin || twin->shadow.reported != sub.pairs) return false;
  }
  for (const auto& [tag, twin] : twins.entries()) {
    if (!expected.contains(tag) && !twin.shadow.reported.empty()) return false;
  }
  return true;
}

// One shadow service and one device on a private bus; nothing survives a
// trial, which is how the system is emptied between trials.
class TrialRig {
 public:
  TrialRig()
      : access_(std::make_shared<AccessController>()),
        bus_(access_, InProcessBus::Options{8, false}),
        service_(bus_, access_, ServiceOptions{60'000, TwinRegistry::kDefaultMaxTwins, wall_clock_ms, 0}),
        device_(bus_, Principal{"bench-device-principal", {}, {Role::kDevice},
                                std::string(kBenchDevice)}),
        driver_{"bench-driver", {}, {Role::kAdmin}, std::nullopt} {
    device_.set_qos(0);
    service_.set_processing_observer([this](const ProcessingSample& s) { last_sample_ = s; });
    service_.start();
    device_.connect();
  }

  SimulatedDevice& device() { return device_; }
  ShadowService& service() { return service_; }

  // Runs the bus and returns the sample from the report the device sent, if
  // the shadow processed one.
  std::optional<ProcessingSample> settle() {
    last_sample_.reset();
    bus_.run_until_idle();
    return last_sample_;
  }

  void push_desired(const DesiredUpdate& desired) {
    UpdateRequest request;
    request.desired = desired;
    bus_.publish(driver_, WireMessage{topic_for(kBenchDevice, std::nullopt, Channel::kUpdate),
                                      encode_update(request), 0, {}});
  }

 private:
  std::shared_ptr<AccessController> access_;
  InProcessBus bus_;
  ShadowService service_;
  SimulatedDevice device_;
  Principal driver_;
  std::optional<ProcessingSample> last_sample_;
};

struct StepPlan {
  Experiment experiment;
  std::optional<int> static_tags;
};

// Tags the pair `index` carries once the state holds `pairs` pairs.
std::size_t tags_for_step(const StepPlan& plan, std::size_t pairs) {
  return plan.static_tags ? static_cast<std::size_t>(*plan.static_tags) : pairs;
}

// Runs one trial; returns false if the device failed to conform.
bool run_trial(const StepPlan& plan, std::size_t trial, const BenchOptions& options,
               std::vector<TrialRecord>* records, std::size_t& verification_failures) {
  TrialRig rig;
  auto record = [&](const ProcessingSample& sample, std::size_t pairs) {
    if (options.verify_state) {
      std::size_t expected = pairs * tags_for_step(plan, pairs);
      auto base = rig.service().base_document(kBenchDevice);
      auto twins = rig.service().twins(kBenchDevice);
      if (sample.pair_count != pairs || sample.tag_attachments != expected || !base || !twins ||
          count_tags(*base) != expected || !partition_holds(*base, *twins)) {
        ++verification_failures;
      }
    }
    if (records) {
      records->push_back(TrialRecord{plan.experiment, plan.static_tags, pairs,
                                     static_cast<std::int64_t>(sample.elapsed.count()), trial,
                                     sample.tag_attachments});
    }
  };

  rig.device().emit_reported();
  auto first = rig.settle();
  if (!first) return false;
  record(*first, 0);

  for (std::size_t pairs = 1; pairs <= options.max_pairs; ++pairs) {
    std::size_t tag_count = tags_for_step(plan, pairs);
    std::vector<std::string> tags;
    tags.reserve(tag_count);
    for (std::size_t t = 0; t < tag_count; ++t) tags.push_back(tag_name(t));

    // New pair, plus (dynamic) one more tag on every existing pair. Tags
    // travel with device reports, so the device configuration carries them
    // and the desired push only changes values.
    DesiredUpdate desired;
    for (std::size_t i = 0; i < pairs; ++i) {
      auto key = pair_key(i);
      if (i + 1 == pairs || !plan.static_tags) {
        rig.device().configure_sensor(SensorConfig{key, Scalar(-1), tags, 0});
      }
      desired.emplace(key, Scalar(static_cast<std::int64_t>(pairs)));
    }
    rig.push_desired(desired);
    auto sample = rig.settle();
    auto base = rig.service().base_document(kBenchDevice);
    if (!sample || !base || !base->delta.empty() || !base->desired.empty()) return false;
    record(*sample, pairs);
  }
  return true;
}

BenchResult run_plan(const StepPlan& plan, const BenchOptions& options, BenchResult& result) {
  for (std::size_t w = 0; w < options.warmup_trials; ++w) {
    std::size_t ignored = 0;
    run_trial(plan, w, options, nullptr, ignored);
  }
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    std::vector<TrialRecord> records;
    if (run_trial(plan, trial, options, &records, result.verification_failures)) {
      result.records.insert(result.records.end(), records.begin(), records.end());
    } else {
      ++result.aborted_trials;
      if (options.log) {
        options.log("trial " + std::to_string(trial) + " aborted: device did not conform");
      }
    }
  }
  return result;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad number in CSV: " + std::string(s));
  }
  return v;
}

std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("bad integer in CSV: " + std::string(s));
  }
  return v;
}

}  // namespace

std::string_view to_string(Experiment experiment) {
  return experiment == Experiment::kDynamic ? "dynamic" : "static";
}

BenchResult run_dynamic_scaling(const BenchOptions& options) {
  BenchResult result;
  run_plan(StepPlan{Experiment::kDynamic, std::nullopt}, options, result);
  return result;
}

BenchResult run_static_scaling(std::span<const int> tags_per_pair, const BenchOptions& options) {
  BenchResult result;
  for (int tags : tags_per_pair) {
    if (tags < 1) throw std::invalid_argument("tags per pair must be at least 1");
    run_plan(StepPlan{Experiment::kStatic, tags}, options, result);
  }
  return result;
}

double student_t_quantile(double p, double degrees_of_freedom) {
  boost::math::students_t dist(degrees_of_freedom);
  return boost::math::quantile(dist, p);
}

std::vector<SummaryPoint> summarize(std::span<const TrialRecord> records,
                                    std::vector<std::string>* warnings) {
  using GroupKey = std::tuple<Experiment, int, std::size_t>;
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& r : records) {
    groups[{r.experiment, r.tags_per_pair.value_or(0), r.pair_count}].push_back(
        static_cast<double>(r.processing_ns) / 1e6);
  }
  std::vector<SummaryPoint> out;
  for (const auto& [key, samples] : groups) {
    const auto& [experiment, tags, pairs] = key;
    std::optional<int> tags_per_pair =
        experiment == Experiment::kStatic ? std::optional<int>(tags) : std::nullopt;
    if (samples.size() < 2) {
      if (warnings) {
        warnings->push_back("pair_count " + std::to_string(pairs) +
                            ": fewer than 2 samples, point omitted");
      }
      continue;
    }
    double n = static_cast<double>(samples.size());
    double mean = 0;
    for (double s : samples) mean += s;
    mean /= n;
    double ss = 0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    double sd = std::sqrt(ss / (n - 1));
    double half = student_t_quantile(0.995, n - 1) * sd / std::sqrt(n);
    out.push_back(SummaryPoint{experiment, tags_per_pair, pairs, mean, mean - half, mean + half,
                               samples.size()});
  }
  return out;
}

std::string to_csv(std::span<const SummaryPoint> summaries) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const auto& p : summaries) {
    out += to_string(p.experiment);
    out.push_back(',');
    if (p.tags_per_pair) out += std::to_string(*p.tags_per_pair);
    out.push_back(',');
    out += std::to_string(p.pair_count);
    out.push_back(',');
    out += format_double(p.mean_ms);
    out.push_back(',');
    out += format_double(p.ci99_low_ms);
    out.push_back(',');
    out += format_double(p.ci99_high_ms);
    out.push_back(',');
    out += std::to_string(p.n);
    out.push_back('\n');
  }
  return out;
}

void emit_csv(std::span<const SummaryPoint> summaries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_csv(summaries);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<SummaryPoint> parse_csv(std::string_view text) {
  std::vector<SummaryPoint> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("missing CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (fields.size() != 7) throw std::runtime_error("expected 7 CSV fields: " + line);
    SummaryPoint p;
    if (fields[0] == "dynamic") {
      p.experiment = Experiment::kDynamic;
    } else if (fields[0] == "static") {
      p.experiment = Experiment::kStatic;
    } else {
      throw std::runtime_error("unknown experiment: " + std::string(fields[0]));
    }
    if (!fields[1].empty()) p.tags_per_pair = static_cast<int>(parse_size(fields[1]));
    p.pair_count = parse_size(fields[2]);
    p.mean_ms = parse_double(fields[3]);
    p.ci99_low_ms = parse_double(fields[4]);
    p.ci99_high_ms = parse_double(fields[5]);
    p.n = parse_size(fields[6]);
    out.push_back(p);
  }
  return out;
}

}  // namespace twinmesh
