// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "faassim/distribution.hpp"
#include "faassim/engine.hpp"

namespace faassim {

/// Quantile levels of the Azure durations schema, in column order.
inline constexpr std::array<double, 7> kDurationQuantiles = {0.0, 0.01, 0.25, 0.50, 0.75, 0.99, 1.0};

struct DurationStats {
  double average_ms = 0.0;
  /// p0, p1, p25, p50, p75, p99, p100.
  std::array<double, 7> percentile_ms{};

  /// Mean of the piecewise-linear inverse CDF through the percentile points.
  double interpolated_mean() const;

  /// Inverse CDF at u in [0, 1].
  double quantile(double u) const;
};

struct FunctionProfile {
  std::string id;
  std::int64_t memory_mb = 0;
  DurationStats durations;
  std::vector<std::int64_t> per_minute_counts;

  std::int64_t total_invocations() const;
};

/// Throws Error(NonMonotonePercentiles | InvalidProfile | NegativeCount).
void validate_profile(const FunctionProfile& profile);

struct TraceFiles {
  std::filesystem::path invocations;
  std::filesystem::path durations;
  std::filesystem::path memory;
};

/// Reads the three-file Azure-style trace. Columns are located by header
/// name, extra columns are ignored, minute columns are the all-digit headers
/// `1..N`. Output order follows the invocations file.
std::vector<FunctionProfile> parse_trace(const TraceFiles& files);

void write_trace(std::span<const FunctionProfile> profiles, const TraceFiles& files);

/// Stratified sample over floor(log10(total invocations)) buckets with
/// largest-remainder allocation; uniform choice within a bucket. Functions
/// with zero invocations are never picked. Returned in population order.
std::vector<FunctionProfile> sample_functions(std::span<const FunctionProfile> profiles, std::size_t k,
                                              std::uint64_t seed);

struct PlannedFunction {
  std::string id;
  std::int64_t memory_mb = 0;
};

struct PlanEntry {
  TimeMs arrival_ms = 0;
  std::uint32_t function = 0;  // index into InvocationPlan::functions
  std::uint32_t seq = 0;       // per-function generation index
  std::int64_t duration_ms = 0;
};

struct InvocationPlan {
  std::vector<PlannedFunction> functions;
  std::vector<PlanEntry> entries;
  TimeMs total_duration_ms = 0;
  TimeMs warmup_cutoff_ms = 0;

  /// FNV-1a over every entry and function; identical plans hash equal.
  std::uint64_t checksum() const;
};

/// Expands per-minute counts into arrivals placed uniformly within each
/// minute, durations drawn through the percentile interpolant. Each function
/// draws from its own substream keyed by its id.
InvocationPlan generate_invocations(std::span<const FunctionProfile> profiles, int experiment_minutes,
                                    int warmup_minutes, std::uint64_t seed);

/// Loads a fully explicit plan (`HashFunction,ArrivalMs,DurationMs,MemoryMb`).
InvocationPlan load_plan(const std::filesystem::path& path, int experiment_minutes, int warmup_minutes);

struct SyntheticTraceSpec {
  enum class CountNoise { Exact, Poisson };

  int num_functions = 1;
  int minutes = 1;
  /// Per-function mean invocations per minute.
  Distribution rate_per_minute = Distribution::fixed(1.0);
  /// When > 0 the per-function rates are rescaled to sum to this.
  double aggregate_rate_per_minute = 0.0;
  /// Per-function median duration; the other percentiles follow a fixed shape.
  Distribution median_duration_ms = Distribution::fixed(100.0);
  Distribution memory_mb = Distribution::fixed(128.0);
  CountNoise count_noise = CountNoise::Exact;
  /// Log-sd of a mean-one per-minute rate multiplier (0 = stationary).
  double burst_sigma = 0.0;
  /// Function ids are `<id_prefix><zero-padded index>`.
  std::string id_prefix = "fn";

  void validate() const;
};

std::vector<FunctionProfile> gen_synthetic_trace(const SyntheticTraceSpec& spec, std::uint64_t seed);

/// Concatenates independently generated classes. Class i is generated with
/// derive_seed(seed, i); all classes must cover the same number of minutes
/// and use distinct id prefixes.
std::vector<FunctionProfile> gen_synthetic_mixture(std::span<const SyntheticTraceSpec> classes, std::uint64_t seed);

}  // namespace faassim
