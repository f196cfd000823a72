// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faassim/distribution.hpp"
#include "faassim/engine.hpp"
#include "faassim/rng.hpp"

namespace faassim {

using InstanceId = std::uint64_t;
using FunctionIndex = std::uint32_t;
using NodeId = std::uint32_t;

enum class InstanceState : std::uint8_t { Creating, Idle, Busy, Terminating };

const char* to_string(InstanceState state) noexcept;

struct Instance {
  InstanceId id = 0;
  FunctionIndex function = 0;
  NodeId node = 0;
  InstanceState state = InstanceState::Creating;
  int concurrency_limit = 1;
  int in_flight = 0;
  std::int64_t memory_mb = 0;
  TimeMs created_at_ms = 0;
  TimeMs ready_at_ms = -1;
  TimeMs idle_since_ms = -1;
  EventHandle ready_event;
  bool removed = false;
};

/// Per-node resource state. CPU accumulators are CPU-milliseconds.
struct NodeState {
  NodeId id = 0;
  int cores = 0;
  std::int64_t memory_capacity_mb = 0;
  std::int64_t reserved_memory_mb = 0;
  int running_requests = 0;
  int peak_running_requests = 0;
  int live_instances = 0;

  double function_work_ms = 0.0;
  double lifecycle_worker_ms = 0.0;
  /// Integral of live instances over time, instance-milliseconds, up to `accrued_at_ms`.
  double instance_ms = 0.0;
  TimeMs accrued_at_ms = 0;
};

struct ClusterShape {
  int nodes = 8;
  int cores_per_node = 10;
  std::int64_t memory_mb_per_node = 65536;

  void validate() const;
  bool operator==(const ClusterShape&) const = default;
};

/// Latency and CPU cost of instance lifecycle and request routing.
///
/// Lifecycle charges are booked per event. Background charges accrue
/// continuously: `idle_background` per live instance on its node,
/// `worker_background` as a cluster-wide flat rate spread evenly over the
/// nodes, `master_background` as a flat control-plane rate.
struct CostModel {
  std::string profile;  // name of the profile this was built from, if any
  Distribution creation_delay_ms = Distribution::fixed(1000.0);
  Distribution warm_path_overhead_ms = Distribution::fixed(0.0);
  double cpu_create_worker_ms = 0.0;
  double cpu_teardown_worker_ms = 0.0;
  double cpu_master_per_lifecycle_ms = 0.0;
  double idle_background_cpu_ms_per_s = 0.0;
  double worker_background_cpu_ms_per_s = 0.0;
  double master_background_cpu_ms_per_s = 0.0;

  /// `knative-like` (~1 s creation, 5-10 ms warm path) or `aws-like`
  /// (~300 ms creation, 20-30 ms warm path). Both share the CPU charges
  /// calibrated on the bundled desk trace. Throws Error(InvalidArgument).
  static CostModel from_profile(std::string_view name);
  static std::vector<std::string> profile_names();

  void validate() const;
  bool operator==(const CostModel&) const = default;
};

struct UsageSnapshot {
  std::int64_t total_instance_memory_mb = 0;  // Creating + Idle + Busy
  std::int64_t busy_instance_memory_mb = 0;
  std::int64_t live_instances = 0;
  std::int64_t creating_instances = 0;
  std::int64_t busy_instances = 0;
  std::vector<double> node_utilization;  // running requests / cores
};

struct LifecycleCounters {
  std::uint64_t creations = 0;
  std::uint64_t teardowns = 0;  // includes aborted creations
};

struct CpuTotals {
  double function_work_ms = 0.0;
  double worker_overhead_ms = 0.0;
  double master_overhead_ms = 0.0;
};

struct FunctionCounts {
  int creating = 0;
  int idle = 0;
  int busy = 0;
  int in_flight = 0;

  int live() const noexcept { return creating + idle + busy; }
};

class UsageObserver {
 public:
  virtual ~UsageObserver() = default;
  /// Called after every change of the memory footprint or busy set.
  virtual void on_memory_change(TimeMs now, std::int64_t total_mb, std::int64_t busy_mb) = 0;
};

/// Worker nodes, instance lifecycle, placement and CPU accounting.
///
/// Scheduling: start_instance queues an InstanceReady event (subject =
/// instance id, aux = function); begin_execution queues a RequestComplete
/// event (subject = instance id, aux = invocation index). The owner of the
/// engine routes those events back here via mark_ready / finish_execution.
class Cluster {
 public:
  Cluster(const ClusterShape& shape, const CostModel& cost, Engine& engine, RngStream creation_delays);

  void set_observer(UsageObserver* observer) noexcept { observer_ = observer; }

  /// Reserves memory on the node with the most free memory (ties: lowest id)
  /// and books creation CPU. `draw_key` selects the creation-delay draw.
  /// Throws Error(ClusterOutOfMemory) when no node fits.
  InstanceId start_instance(FunctionIndex function, std::int64_t memory_mb, int concurrency_limit, TimeMs now,
                            std::uint64_t draw_key);

  /// Creating -> Idle.
  void mark_ready(InstanceId id, TimeMs now);

  /// Idle or Creating -> Terminating, memory released, teardown CPU booked.
  /// Throws Error(TerminateBusyInstance) for a Busy instance.
  void terminate_instance(InstanceId id, TimeMs now);

  /// Occupies one slot from `now`; execution proper starts after `lead_ms`
  /// and the completion fires at now + lead_ms + duration_ms.
  /// Throws Error(ConcurrencyExceeded) or Error(IllegalTransition).
  EventHandle begin_execution(InstanceId id, std::uint64_t invocation, std::int64_t duration_ms, TimeMs now,
                              TimeMs lead_ms = 0);

  /// Frees the slot and books `duration_ms` of function work on the node.
  void finish_execution(InstanceId id, std::int64_t duration_ms, TimeMs now);

  UsageSnapshot snapshot_usage(TimeMs now) const;
  CpuTotals cpu_totals(TimeMs now) const;
  double node_worker_overhead_ms(NodeId node, TimeMs now) const;
  const LifecycleCounters& counters() const noexcept { return counters_; }

  const Instance& instance(InstanceId id) const;
  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  const CostModel& cost_model() const noexcept { return cost_; }

  std::optional<InstanceId> most_recent_idle(FunctionIndex function) const;
  std::optional<InstanceId> oldest_idle(FunctionIndex function) const;
  /// Busy instance with a free slot and the fewest requests in flight.
  std::optional<InstanceId> least_loaded_with_slot(FunctionIndex function) const;
  /// Creating instances of the function, newest first.
  std::vector<InstanceId> creating_instances(FunctionIndex function) const;
  FunctionCounts function_counts(FunctionIndex function) const;

  /// Memory bounds on every node, per-function bookkeeping and the CPU
  /// accounting identity. Throws Error(InvariantViolation).
  void check_invariants(TimeMs now) const;
  /// Cheap per-event form: memory bounds only.
  void check_memory_bounds() const;

 private:
  struct FunctionPool {
    std::set<std::pair<TimeMs, InstanceId>> idle;             // by idle_since
    std::set<std::pair<int, InstanceId>> with_slot;           // Busy, in_flight < limit
    std::set<InstanceId> creating;
    int busy = 0;
    int in_flight = 0;
  };

  Instance& mutable_instance(InstanceId id);
  FunctionPool& pool(FunctionIndex function);
  void accrue(NodeState& node, TimeMs now);
  void notify(TimeMs now);
  [[noreturn]] void illegal(const Instance& inst, std::string_view to) const;

  ClusterShape shape_;
  CostModel cost_;
  Engine& engine_;
  RngStream creation_delays_;
  UsageObserver* observer_ = nullptr;

  std::vector<NodeState> nodes_;
  std::vector<Instance> instances_;  // indexed by id - 1
  std::vector<FunctionPool> pools_;
  LifecycleCounters counters_;
  std::uint64_t master_lifecycle_events_ = 0;
  std::int64_t total_memory_mb_ = 0;
  std::int64_t busy_memory_mb_ = 0;
  std::int64_t live_instances_ = 0;
};

}  // namespace faassim
