// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "faassim/cluster.hpp"
#include "faassim/policy.hpp"
#include "faassim/trace.hpp"

namespace faassim {

struct WorkloadConfig {
  enum class Source { Trace, Synthetic, Plan };

  Source source = Source::Synthetic;
  // Paths as written in the config; resolved against ExperimentConfig::base_dir.
  std::string invocations_path;
  std::string durations_path;
  std::string memory_path;
  std::string plan_path;
  SyntheticTraceSpec synthetic;
  std::size_t sample_k = 0;  // 0 keeps every function with load
  int experiment_minutes = 80;
  int warmup_minutes = 40;

  bool operator==(const WorkloadConfig&) const;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir;
  ClusterShape cluster;
  CostModel cost_model = CostModel::from_profile("knative-like");
  PolicyConfig policy;
  WorkloadConfig workload;
  bool check_invariants = false;
  TimeMs metrics_period_ms = 10000;
  std::filesystem::path base_dir;  // not serialized

  /// Throws Error(InvariantViolation) with the key path.
  void validate() const;
  std::filesystem::path resolve(const std::string& path) const;
  bool operator==(const ExperimentConfig& o) const;
};

/// Builds a config from the JSON key tree. Unknown keys raise
/// Error(UnknownKey), type errors Error(ParseError), semantic errors
/// Error(InvariantViolation); each message names the key path.
ExperimentConfig parse_config(const nlohmann::ordered_json& tree, const std::filesystem::path& base_dir);

/// Reads and parses a file; relative paths inside resolve against its directory.
nlohmann::ordered_json read_json_file(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully explicit tree; parse_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const ExperimentConfig& config);

/// Applies `dotted.key=value`. The value is read as JSON when it parses as
/// JSON and taken as a plain string otherwise. Throws Error(InvalidArgument).
void apply_override(nlohmann::ordered_json& tree, std::string_view assignment);
void set_path(nlohmann::ordered_json& tree, std::string_view dotted, nlohmann::ordered_json value);

Distribution parse_distribution(const nlohmann::ordered_json& node, const std::string& path);
nlohmann::ordered_json to_json(const Distribution& d);

SyntheticTraceSpec parse_synthetic_spec(const nlohmann::ordered_json& node, const std::string& path);
nlohmann::ordered_json to_json(const SyntheticTraceSpec& spec);

}  // namespace faassim
