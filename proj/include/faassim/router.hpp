// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "faassim/cluster.hpp"
#include "faassim/metrics.hpp"
#include "faassim/policy.hpp"
#include "faassim/trace.hpp"

namespace faassim {

struct PendingRequest {
  std::uint64_t invocation = 0;
  TimeMs enqueued_at_ms = 0;
  std::optional<InstanceId> binding;  // sync only
};

/// Front door. Routes arrivals to free capacity and otherwise buffers them:
/// bound one-to-one to a fresh instance under the sync policy, in a
/// per-function FIFO served by any instance under the async policy.
///
/// Every request pays a warm-path overhead drawn per invocation. The slot is
/// claimed when the request is routed and execution starts after the
/// overhead, so dispatch time = routing time + overhead.
class Router {
 public:
  Router(const InvocationPlan& plan, Cluster& cluster, AutoscalingPolicy& policy, MetricsRecorder& recorder,
         RngStream overhead_draws);

  void on_arrival(std::uint64_t invocation, TimeMs now);
  /// After Cluster::mark_ready. Throws Error(BindingViolation) when a sync
  /// instance comes up with no request bound to it.
  void on_instance_ready(InstanceId id, TimeMs now);
  /// RequestComplete for `invocation` on instance `id`.
  void on_completion(InstanceId id, std::uint64_t invocation, TimeMs now);
  /// Memory was released; requests waiting for memory retry in arrival order.
  void on_capacity_released(TimeMs now);

  std::size_t queued(FunctionIndex function) const;
  std::size_t waiting_for_memory() const noexcept { return memory_waiters_.size(); }
  /// Arrived but not yet completed.
  std::uint64_t outstanding() const noexcept { return arrived_ - completed_; }

 private:
  void dispatch(InstanceId id, std::uint64_t invocation, TimeMs now, bool cold);
  void place(const PendingRequest& request, TimeMs now, bool retry);
  std::deque<PendingRequest>& fifo(FunctionIndex function);

  const InvocationPlan& plan_;
  Cluster& cluster_;
  AutoscalingPolicy& policy_;
  MetricsRecorder& recorder_;
  RngStream overhead_draws_;
  bool sync_;

  std::vector<std::deque<PendingRequest>> fifos_;              // async, per function
  std::unordered_map<InstanceId, PendingRequest> bindings_;   // sync
  std::deque<PendingRequest> memory_waiters_;                 // sync, global arrival order
  std::uint64_t arrived_ = 0;
  std::uint64_t completed_ = 0;
};

}  // namespace faassim
