// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/router.hpp"

#include "faassim/error.hpp"

namespace faassim {

Router::Router(const InvocationPlan& plan, Cluster& cluster, AutoscalingPolicy& policy, MetricsRecorder& recorder,
               RngStream overhead_draws)
    : plan_(plan),
      cluster_(cluster),
      policy_(policy),
      recorder_(recorder),
      overhead_draws_(overhead_draws),
      sync_(policy.config().variant == PolicyVariant::SyncKeepalive),
      fifos_(plan.functions.size()) {}

std::deque<PendingRequest>& Router::fifo(FunctionIndex function) { return fifos_.at(function); }

std::size_t Router::queued(FunctionIndex function) const {
  return function < fifos_.size() ? fifos_[function].size() : 0;
}

void Router::dispatch(InstanceId id, std::uint64_t invocation, TimeMs now, bool cold) {
  const auto& entry = plan_.entries[invocation];
  if (cluster_.instance(id).state == InstanceState::Idle) policy_.on_instance_claimed(id);
  auto draws = overhead_draws_.substream(invocation);
  const TimeMs overhead = cluster_.cost_model().warm_path_overhead_ms.sample_ms(draws);
  cluster_.begin_execution(id, invocation, entry.duration_ms, now, overhead);
  recorder_.on_dispatch(invocation, now + overhead, cold);
}

void Router::place(const PendingRequest& request, TimeMs now, bool retry) {
  const auto function = plan_.entries[request.invocation].function;
  const auto decision = policy_.on_arrival(function, request.invocation, now);
  switch (decision.kind) {
    case ArrivalDecision::Kind::RouteTo:
      dispatch(decision.instance, request.invocation, now, retry);
      break;
    case ArrivalDecision::Kind::CreateAndBind: {
      PendingRequest bound = request;
      bound.binding = decision.instance;
      bindings_.emplace(decision.instance, bound);
      break;
    }
    case ArrivalDecision::Kind::Queue:
      fifo(function).push_back(request);
      break;
    case ArrivalDecision::Kind::WaitForMemory:
      memory_waiters_.push_back(request);
      break;
  }
}

void Router::on_arrival(std::uint64_t invocation, TimeMs now) {
  const auto& entry = plan_.entries.at(invocation);
  recorder_.on_arrival(invocation, entry.function, now, entry.duration_ms);
  ++arrived_;
  if (!sync_ && !fifo(entry.function).empty()) {
    fifo(entry.function).push_back({invocation, now, std::nullopt});
    return;
  }
  place({invocation, now, std::nullopt}, now, false);
}

void Router::on_instance_ready(InstanceId id, TimeMs now) {
  if (auto it = bindings_.find(id); it != bindings_.end()) {
    const auto invocation = it->second.invocation;
    bindings_.erase(it);
    dispatch(id, invocation, now, true);
    return;
  }
  if (sync_) {
    throw Error(ErrorCode::BindingViolation, "sync instance " + std::to_string(id) + " ready without a binding");
  }
  const auto& inst = cluster_.instance(id);
  auto& q = fifo(inst.function);
  while (!q.empty() && inst.in_flight < inst.concurrency_limit) {
    const auto invocation = q.front().invocation;
    q.pop_front();
    dispatch(id, invocation, now, true);
  }
}

void Router::on_completion(InstanceId id, std::uint64_t invocation, TimeMs now) {
  const auto& entry = plan_.entries.at(invocation);
  cluster_.finish_execution(id, entry.duration_ms, now);
  recorder_.on_completion(invocation, now);
  ++completed_;

  const auto& inst = cluster_.instance(id);
  if (!sync_) {
    auto& q = fifo(inst.function);
    while (!q.empty() && inst.in_flight < inst.concurrency_limit) {
      const auto next = q.front().invocation;
      q.pop_front();
      dispatch(id, next, now, true);
    }
    return;
  }
  if (inst.state != InstanceState::Idle) return;
  // A request of this function stuck on memory can take the instance directly.
  for (auto it = memory_waiters_.begin(); it != memory_waiters_.end(); ++it) {
    if (plan_.entries[it->invocation].function == inst.function) {
      const auto waiting = it->invocation;
      memory_waiters_.erase(it);
      dispatch(id, waiting, now, true);
      return;
    }
  }
  policy_.on_instance_idle(id, now);
}

void Router::on_capacity_released(TimeMs now) {
  if (memory_waiters_.empty()) return;
  std::deque<PendingRequest> waiting;
  waiting.swap(memory_waiters_);
  while (!waiting.empty()) {
    const auto request = waiting.front();
    waiting.pop_front();
    place(request, now, true);
    if (!memory_waiters_.empty()) {
      // Still out of memory: keep the remaining order intact.
      for (auto& r : waiting) memory_waiters_.push_back(r);
      return;
    }
  }
}

}  // namespace faassim
