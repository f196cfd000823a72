// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "faassim/cluster.hpp"
#include "faassim/engine.hpp"

namespace faassim {

struct InvocationRecord {
  FunctionIndex function = 0;
  TimeMs arrival_ms = -1;
  TimeMs dispatch_ms = -1;
  TimeMs completion_ms = -1;
  std::int64_t expected_duration_ms = 0;
  bool cold = false;  // waited for an instance to be created (sync) or queued (async)

  bool completed() const noexcept { return completion_ms >= 0; }
  TimeMs response_ms() const noexcept { return completion_ms - arrival_ms; }
  TimeMs queueing_ms() const noexcept { return dispatch_ms - arrival_ms; }
  double slowdown() const noexcept {
    return static_cast<double>(response_ms()) / static_cast<double>(expected_duration_ms);
  }
};

struct UsageSample {
  TimeMs timestamp_ms = 0;
  std::int64_t total_instance_memory_mb = 0;
  std::int64_t busy_instance_memory_mb = 0;
  std::int64_t live_instances = 0;
  std::uint64_t creations = 0;
  std::uint64_t teardowns = 0;
  double function_work_ms = 0.0;
  double worker_overhead_ms = 0.0;
  double master_overhead_ms = 0.0;
  std::vector<double> node_utilization;
};

/// Memory footprint that holds from `at` until the next step.
struct MemoryStep {
  TimeMs at = 0;
  std::int64_t total_mb = 0;
  std::int64_t busy_mb = 0;
};

struct MeasurementWindow {
  TimeMs start_ms = 0;
  TimeMs end_ms = 0;

  double seconds() const noexcept { return static_cast<double>(end_ms - start_ms) / 1000.0; }
};

/// Nearest-rank p99 (index ceil(0.99 n), 1-based). Throws Error(EmptyFunction).
double per_function_p99(std::span<const double> slowdowns);

/// Nearest-rank percentile for p in (0, 100], given in tenths of a percent.
double nearest_rank_permille(std::span<const double> sorted, int permille);

/// exp(mean(ln v)). Throws Error(NonPositiveSlowdown) on any v <= 0.
double aggregate_slowdown(std::span<const double> values);

/// Step integration of total over busy memory inside the window. Returns
/// nullopt when the busy integral is zero.
std::optional<double> normalized_memory(std::span<const MemoryStep> steps, MeasurementWindow window);

/// Cumulative counter samples must include the window boundaries (the last
/// sample at or before each boundary is used).
struct RatePair {
  double creation_per_s = 0.0;
  double teardown_per_s = 0.0;
};
RatePair creation_rate(std::span<const UsageSample> samples, MeasurementWindow window);

struct CpuOverhead {
  double total = 0.0;         // (worker + master) / function work
  double worker = 0.0;        // worker / function work
  double master = 0.0;        // master / function work
  double worker_share = 0.0;  // worker / (worker + master)
  double master_share = 0.0;
};
/// Throws Error(ZeroUsefulWork).
CpuOverhead normalized_cpu_overhead(std::span<const UsageSample> samples, MeasurementWindow window);

/// Streaming counterpart of normalized_memory() used during simulation.
class StepIntegrator {
 public:
  explicit StepIntegrator(MeasurementWindow window) : window_(window) {}

  void change(TimeMs at, std::int64_t total_mb, std::int64_t busy_mb);
  /// Integrals over [window.start, min(at, window.end)].
  std::pair<double, double> integrals_until(TimeMs at) const;

 private:
  MeasurementWindow window_;
  TimeMs last_ = 0;
  std::int64_t total_ = 0;
  std::int64_t busy_ = 0;
  double total_integral_ = 0.0;
  double busy_integral_ = 0.0;
};

/// Per-invocation lifecycle plus cluster usage. Engine-thread only.
class MetricsRecorder final : public UsageObserver {
 public:
  MetricsRecorder(std::size_t invocations, MeasurementWindow window);

  void on_arrival(std::uint64_t invocation, FunctionIndex function, TimeMs arrival, std::int64_t duration_ms);
  /// Throws Error(InvariantViolation) on a second dispatch.
  void on_dispatch(std::uint64_t invocation, TimeMs dispatch, bool cold);
  /// Throws Error(InvariantViolation) on a second completion.
  void on_completion(std::uint64_t invocation, TimeMs completion);

  void on_memory_change(TimeMs now, std::int64_t total_mb, std::int64_t busy_mb) override;
  void add_sample(UsageSample sample) { samples_.push_back(std::move(sample)); }

  const std::vector<InvocationRecord>& records() const noexcept { return records_; }
  const std::vector<UsageSample>& samples() const noexcept { return samples_; }
  const MeasurementWindow& window() const noexcept { return window_; }
  std::pair<double, double> memory_integrals() const { return integrator_.integrals_until(window_.end_ms); }
  std::uint64_t dispatched() const noexcept { return dispatched_; }
  std::uint64_t completed() const noexcept { return completed_; }

 private:
  MeasurementWindow window_;
  std::vector<InvocationRecord> records_;
  std::vector<UsageSample> samples_;
  StepIntegrator integrator_;
  std::uint64_t dispatched_ = 0;
  std::uint64_t completed_ = 0;
};

/// Policy parameters echoed into the summary CSV. Inapplicable ones are empty.
struct SummaryKeys {
  std::string policy;
  std::string keepalive_s;
  std::string window_s;
  std::string target;
  std::string cc;
};

struct ExperimentReport {
  std::optional<double> slowdown_geomean_p99;
  std::vector<std::pair<std::string, double>> per_function_p99;
  std::size_t excluded_functions = 0;
  std::optional<double> normalized_memory;
  double creation_rate_per_s = 0.0;
  double teardown_rate_per_s = 0.0;
  std::optional<CpuOverhead> cpu_overhead;
  double cold_start_fraction = 0.0;
  std::vector<std::pair<double, double>> queueing_cdf;  // (percentile, ms)
  std::size_t invocations = 0;
  std::size_t measured_invocations = 0;
  std::vector<double> peak_node_utilization;
  std::vector<UsageSample> timeseries;
  std::uint64_t events_processed = 0;
  std::uint64_t plan_checksum = 0;
  std::uint64_t seed = 0;
  SummaryKeys keys;
  nlohmann::ordered_json config;

  nlohmann::ordered_json to_json() const;
};

/// Percentile grid of the exported queueing CDF, in tenths of a percent:
/// deciles 10..90 followed by 90.1..100 in 0.1 steps.
std::vector<int> cdf_permilles();

/// Aggregates a finished recorder. `function_ids` names the functions by index.
ExperimentReport build_report(const MetricsRecorder& recorder, std::span<const std::string> function_ids);

std::string summary_csv_header();
std::string summary_csv_row(const ExperimentReport& report);

/// Writes `<basename>.json`, `<basename>_cdf.csv` and `<basename>_nodes.csv`.
/// Throws Error(Io).
void export_report(const ExperimentReport& report, const std::filesystem::path& dir, const std::string& basename);

void write_summary_csv(std::span<const ExperimentReport> reports, const std::filesystem::path& path);

}  // namespace faassim
