// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "faassim/config.hpp"
#include "faassim/metrics.hpp"
#include "faassim/trace.hpp"

namespace faassim {

/// Parses, samples and expands the configured workload. Trace sampling and
/// expansion draw from `seed`.
InvocationPlan build_plan(const ExperimentConfig& config, std::uint64_t seed);

struct RunOptions {
  std::ostream* event_log = nullptr;
  std::vector<InvocationRecord>* records = nullptr;
};

/// Simulates a prepared plan with simulation seed `seed` and fills in the
/// report's summary keys and config echo.
ExperimentReport run_plan(const ExperimentConfig& config, const InvocationPlan& plan, std::uint64_t seed,
                          const RunOptions& options = {});

/// build_plan + run_plan, both seeded with config.seed.
ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Large-run mode: requires >= 50 nodes and >= 2000 functions in the plan
/// (Error(InvalidArgument) / Error(InsufficientFunctions)) and always checks
/// cluster invariants.
ExperimentReport scale_mode(ExperimentConfig config, const RunOptions& options = {});

/// `{policy}_{params...}_{extra axes...}_{seed}`, e.g. `sync_ka600s_7`.
std::string report_basename(const ExperimentConfig& config,
                            const std::vector<std::pair<std::string, std::string>>& extra_axes, std::uint64_t seed);

struct SweepAxis {
  std::string key;  // dotted config path
  std::vector<nlohmann::ordered_json> values;
};

struct SweepSpec {
  nlohmann::ordered_json base;  // experiment config tree
  std::filesystem::path base_dir;
  std::vector<SweepAxis> axes;
  int parallelism = 0;  // 0 = hardware concurrency
};

/// Sweep file: `{"base": <config tree or path>, "axes": {key: [values]},
/// "parallelism": n}`.
SweepSpec load_sweep(const std::filesystem::path& path);

struct SweepPoint {
  std::size_t index = 0;
  std::vector<std::pair<std::string, nlohmann::ordered_json>> assignment;
  ExperimentConfig config;
  std::uint64_t seed = 0;  // derive_seed(master, index)
  std::string basename;
};

/// Cross product with the first axis outermost. Validates every point.
std::vector<SweepPoint> expand_sweep(const SweepSpec& spec);

struct PointOutcome {
  SweepPoint point;
  std::optional<ExperimentReport> report;
  std::string error;
};

struct SweepOutcome {
  std::vector<PointOutcome> points;  // in point order
  std::size_t failed = 0;
};

struct SweepOptions {
  int parallelism = 0;  // overrides spec when > 0
  /// Output directory; when empty nothing is written.
  std::filesystem::path out_dir;
  std::function<void(const PointOutcome&)> on_point_done;
};

/// Runs every point on its own engine. The workload plan is built once per
/// distinct workload (seeded with the base seed) and shared. Writes one
/// report per point and `summary.csv` (successful points in order) plus
/// `failures.csv` when any point failed.
SweepOutcome run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

/// Default output directory: $FAAS_SIM_OUT, else "out".
std::filesystem::path default_output_dir();

}  // namespace faassim
