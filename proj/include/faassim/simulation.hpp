// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "faassim/cluster.hpp"
#include "faassim/metrics.hpp"
#include "faassim/policy.hpp"
#include "faassim/trace.hpp"

namespace faassim {

struct SimulationOptions {
  /// Full cluster invariant check at every metrics sample and memory bounds
  /// after every event. Conservation is always checked at the end.
  bool check_invariants = false;
  TimeMs metrics_period_ms = 10000;
  std::ostream* event_log = nullptr;
  /// When set, receives every invocation's lifecycle record after the run.
  std::vector<InvocationRecord>* records = nullptr;
};

/// One experiment: replays `plan` against a fresh engine, cluster, policy and
/// router, runs until every request has completed and the report window has
/// closed, and aggregates the report. Seed streams used: "creation-delay"
/// and "warm-overhead".
///
/// The report's measurement window is [plan.warmup_cutoff_ms,
/// plan.total_duration_ms]. plan_checksum and seed are filled in; keys and
/// config are left to the caller.
ExperimentReport simulate(const InvocationPlan& plan, const ClusterShape& shape, const CostModel& cost,
                          const PolicyConfig& policy, std::uint64_t seed, const SimulationOptions& options = {});

}  // namespace faassim
