// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/cluster.hpp"

#include <algorithm>
#include <cmath>

#include "faassim/error.hpp"

namespace faassim {

const char* to_string(InstanceState state) noexcept {
  switch (state) {
    case InstanceState::Creating: return "Creating";
    case InstanceState::Idle: return "Idle";
    case InstanceState::Busy: return "Busy";
    case InstanceState::Terminating: return "Terminating";
  }
  return "Unknown";
}

void ClusterShape::validate() const {
  if (nodes <= 0 || cores_per_node <= 0 || memory_mb_per_node <= 0) {
    throw Error(ErrorCode::InvariantViolation, "cluster: nodes, cores_per_node and memory_mb_per_node must be > 0");
  }
}

// Calibrated against the bundled desk trace: sweep endpoints stay between
// 5 % and 45 % overhead and background stays small enough that instance
// churn dominates at short windows. Worker
// and master charges keep a fixed 4:1 ratio per lifecycle event and per
// second of background, which pins the worker share at 80 %.
CostModel CostModel::from_profile(std::string_view name) {
  CostModel c;
  c.profile = std::string(name);
  c.cpu_create_worker_ms = 3360.0;
  c.cpu_teardown_worker_ms = 3360.0;
  c.cpu_master_per_lifecycle_ms = 840.0;
  c.idle_background_cpu_ms_per_s = 0.0;
  c.worker_background_cpu_ms_per_s = 940.0;
  c.master_background_cpu_ms_per_s = 235.0;
  if (name == "knative-like") {
    c.creation_delay_ms = Distribution::uniform(950.0, 1050.0);
    c.warm_path_overhead_ms = Distribution::uniform(5.0, 10.0);
  } else if (name == "aws-like") {
    c.creation_delay_ms = Distribution::uniform(280.0, 320.0);
    c.warm_path_overhead_ms = Distribution::uniform(20.0, 30.0);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown cost profile '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> CostModel::profile_names() { return {"knative-like", "aws-like"}; }

void CostModel::validate() const {
  creation_delay_ms.validate("cost_model.creation_delay_ms");
  warm_path_overhead_ms.validate("cost_model.warm_path_overhead_ms");
  for (double v : {cpu_create_worker_ms, cpu_teardown_worker_ms, cpu_master_per_lifecycle_ms,
                   idle_background_cpu_ms_per_s, worker_background_cpu_ms_per_s, master_background_cpu_ms_per_s}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvariantViolation, "cost_model: CPU charges must be finite and >= 0");
    }
  }
}

// --- Cluster -------------------------------------------------------------------

Cluster::Cluster(const ClusterShape& shape, const CostModel& cost, Engine& engine, RngStream creation_delays)
    : shape_(shape), cost_(cost), engine_(engine), creation_delays_(creation_delays) {
  shape_.validate();
  cost_.validate();
  nodes_.resize(static_cast<std::size_t>(shape_.nodes));
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i].id = static_cast<NodeId>(i);
    nodes_[i].cores = shape_.cores_per_node;
    nodes_[i].memory_capacity_mb = shape_.memory_mb_per_node;
  }
}

Instance& Cluster::mutable_instance(InstanceId id) {
  if (id == 0 || id > instances_.size()) {
    throw Error(ErrorCode::InvalidArgument, "unknown instance " + std::to_string(id));
  }
  return instances_[id - 1];
}

const Instance& Cluster::instance(InstanceId id) const {
  if (id == 0 || id > instances_.size()) {
    throw Error(ErrorCode::InvalidArgument, "unknown instance " + std::to_string(id));
  }
  return instances_[id - 1];
}

Cluster::FunctionPool& Cluster::pool(FunctionIndex function) {
  if (function >= pools_.size()) pools_.resize(function + 1);
  return pools_[function];
}

void Cluster::accrue(NodeState& node, TimeMs now) {
  if (now > node.accrued_at_ms) {
    node.instance_ms += static_cast<double>(node.live_instances) * static_cast<double>(now - node.accrued_at_ms);
    node.accrued_at_ms = now;
  }
}

void Cluster::notify(TimeMs now) {
  if (observer_ != nullptr) observer_->on_memory_change(now, total_memory_mb_, busy_memory_mb_);
}

void Cluster::illegal(const Instance& inst, std::string_view to) const {
  throw Error(ErrorCode::IllegalTransition, "instance " + std::to_string(inst.id) + ": " + to_string(inst.state) +
                                                " -> " + std::string(to));
}

InstanceId Cluster::start_instance(FunctionIndex function, std::int64_t memory_mb, int concurrency_limit, TimeMs now,
                                   std::uint64_t draw_key) {
  if (memory_mb <= 0 || concurrency_limit < 1) {
    throw Error(ErrorCode::InvalidArgument, "start_instance: memory must be > 0 and concurrency limit >= 1");
  }
  NodeState* best = nullptr;
  for (auto& n : nodes_) {
    const auto free = n.memory_capacity_mb - n.reserved_memory_mb;
    if (free < memory_mb) continue;
    if (best == nullptr || free > best->memory_capacity_mb - best->reserved_memory_mb) best = &n;
  }
  if (best == nullptr) {
    throw Error(ErrorCode::ClusterOutOfMemory, "no node has " + std::to_string(memory_mb) + " MB free");
  }

  accrue(*best, now);
  best->reserved_memory_mb += memory_mb;
  best->live_instances += 1;
  best->lifecycle_worker_ms += cost_.cpu_create_worker_ms;
  ++master_lifecycle_events_;
  ++counters_.creations;
  total_memory_mb_ += memory_mb;
  ++live_instances_;

  Instance inst;
  inst.id = instances_.size() + 1;
  inst.function = function;
  inst.node = best->id;
  inst.state = InstanceState::Creating;
  inst.concurrency_limit = concurrency_limit;
  inst.memory_mb = memory_mb;
  inst.created_at_ms = now;
  auto delays = creation_delays_.substream(draw_key);
  const TimeMs delay = cost_.creation_delay_ms.sample_ms(delays);
  inst.ready_event = engine_.schedule(now + delay, EventKind::InstanceReady, inst.id, function);
  instances_.push_back(inst);
  pool(function).creating.insert(inst.id);
  notify(now);
  return inst.id;
}

void Cluster::mark_ready(InstanceId id, TimeMs now) {
  auto& inst = mutable_instance(id);
  if (inst.state != InstanceState::Creating) illegal(inst, "Idle");
  auto& p = pool(inst.function);
  p.creating.erase(id);
  inst.state = InstanceState::Idle;
  inst.ready_at_ms = now;
  inst.idle_since_ms = now;
  inst.ready_event = {};
  p.idle.emplace(now, id);
}

void Cluster::terminate_instance(InstanceId id, TimeMs now) {
  auto& inst = mutable_instance(id);
  auto& p = pool(inst.function);
  switch (inst.state) {
    case InstanceState::Busy:
      throw Error(ErrorCode::TerminateBusyInstance, "instance " + std::to_string(id) + " has " +
                                                        std::to_string(inst.in_flight) + " requests in flight");
    case InstanceState::Terminating:
      illegal(inst, "Terminating");
    case InstanceState::Creating:
      engine_.cancel(inst.ready_event);
      inst.ready_event = {};
      p.creating.erase(id);
      break;
    case InstanceState::Idle:
      p.idle.erase({inst.idle_since_ms, id});
      break;
  }
  auto& node = nodes_[inst.node];
  accrue(node, now);
  node.reserved_memory_mb -= inst.memory_mb;
  node.live_instances -= 1;
  node.lifecycle_worker_ms += cost_.cpu_teardown_worker_ms;
  ++master_lifecycle_events_;
  ++counters_.teardowns;
  total_memory_mb_ -= inst.memory_mb;
  --live_instances_;
  inst.state = InstanceState::Terminating;
  inst.removed = true;
  notify(now);
}

EventHandle Cluster::begin_execution(InstanceId id, std::uint64_t invocation, std::int64_t duration_ms, TimeMs now,
                                     TimeMs lead_ms) {
  auto& inst = mutable_instance(id);
  if (inst.state != InstanceState::Idle && inst.state != InstanceState::Busy) illegal(inst, "Busy");
  if (inst.in_flight >= inst.concurrency_limit) {
    throw Error(ErrorCode::ConcurrencyExceeded, "instance " + std::to_string(id) + " already runs " +
                                                    std::to_string(inst.in_flight) + " of " +
                                                    std::to_string(inst.concurrency_limit));
  }
  auto& p = pool(inst.function);
  if (inst.state == InstanceState::Idle) {
    p.idle.erase({inst.idle_since_ms, id});
    inst.state = InstanceState::Busy;
    ++p.busy;
    busy_memory_mb_ += inst.memory_mb;
  } else {
    p.with_slot.erase({inst.in_flight, id});
  }
  inst.in_flight += 1;
  p.in_flight += 1;
  if (inst.in_flight < inst.concurrency_limit) p.with_slot.emplace(inst.in_flight, id);

  auto& node = nodes_[inst.node];
  node.running_requests += 1;
  node.peak_running_requests = std::max(node.peak_running_requests, node.running_requests);
  notify(now);
  return engine_.schedule(now + lead_ms + duration_ms, EventKind::RequestComplete, id, invocation);
}

void Cluster::finish_execution(InstanceId id, std::int64_t duration_ms, TimeMs now) {
  auto& inst = mutable_instance(id);
  if (inst.state != InstanceState::Busy || inst.in_flight < 1) illegal(inst, "finish");
  auto& p = pool(inst.function);
  p.with_slot.erase({inst.in_flight, id});
  inst.in_flight -= 1;
  p.in_flight -= 1;
  auto& node = nodes_[inst.node];
  node.running_requests -= 1;
  node.function_work_ms += static_cast<double>(duration_ms);
  if (inst.in_flight == 0) {
    inst.state = InstanceState::Idle;
    inst.idle_since_ms = now;
    --p.busy;
    busy_memory_mb_ -= inst.memory_mb;
    p.idle.emplace(now, id);
  } else {
    p.with_slot.emplace(inst.in_flight, id);
  }
  notify(now);
}

UsageSnapshot Cluster::snapshot_usage(TimeMs) const {
  UsageSnapshot s;
  s.total_instance_memory_mb = total_memory_mb_;
  s.busy_instance_memory_mb = busy_memory_mb_;
  s.live_instances = live_instances_;
  for (const auto& p : pools_) {
    s.creating_instances += static_cast<std::int64_t>(p.creating.size());
    s.busy_instances += p.busy;
  }
  s.node_utilization.reserve(nodes_.size());
  for (const auto& n : nodes_) s.node_utilization.push_back(static_cast<double>(n.running_requests) / n.cores);
  return s;
}

double Cluster::node_worker_overhead_ms(NodeId id, TimeMs now) const {
  const auto& n = nodes_.at(id);
  const double instance_ms =
      n.instance_ms + static_cast<double>(n.live_instances) * static_cast<double>(std::max<TimeMs>(0, now - n.accrued_at_ms));
  return n.lifecycle_worker_ms + cost_.idle_background_cpu_ms_per_s * instance_ms / 1000.0 +
         cost_.worker_background_cpu_ms_per_s / static_cast<double>(nodes_.size()) * static_cast<double>(now) / 1000.0;
}

CpuTotals Cluster::cpu_totals(TimeMs now) const {
  CpuTotals t;
  for (const auto& n : nodes_) {
    t.function_work_ms += n.function_work_ms;
    t.worker_overhead_ms += node_worker_overhead_ms(n.id, now);
  }
  t.master_overhead_ms = static_cast<double>(master_lifecycle_events_) * cost_.cpu_master_per_lifecycle_ms +
                         cost_.master_background_cpu_ms_per_s * static_cast<double>(now) / 1000.0;
  return t;
}

std::optional<InstanceId> Cluster::most_recent_idle(FunctionIndex function) const {
  if (function >= pools_.size() || pools_[function].idle.empty()) return std::nullopt;
  return pools_[function].idle.rbegin()->second;
}

std::optional<InstanceId> Cluster::oldest_idle(FunctionIndex function) const {
  if (function >= pools_.size() || pools_[function].idle.empty()) return std::nullopt;
  return pools_[function].idle.begin()->second;
}

std::optional<InstanceId> Cluster::least_loaded_with_slot(FunctionIndex function) const {
  if (function >= pools_.size() || pools_[function].with_slot.empty()) return std::nullopt;
  return pools_[function].with_slot.begin()->second;
}

std::vector<InstanceId> Cluster::creating_instances(FunctionIndex function) const {
  if (function >= pools_.size()) return {};
  const auto& c = pools_[function].creating;
  return {c.rbegin(), c.rend()};
}

FunctionCounts Cluster::function_counts(FunctionIndex function) const {
  FunctionCounts c;
  if (function >= pools_.size()) return c;
  const auto& p = pools_[function];
  c.creating = static_cast<int>(p.creating.size());
  c.idle = static_cast<int>(p.idle.size());
  c.busy = p.busy;
  c.in_flight = p.in_flight;
  return c;
}

void Cluster::check_memory_bounds() const {
  for (const auto& n : nodes_) {
    if (n.reserved_memory_mb < 0 || n.reserved_memory_mb > n.memory_capacity_mb) {
      throw Error(ErrorCode::InvariantViolation, "node " + std::to_string(n.id) + " reserves " +
                                                     std::to_string(n.reserved_memory_mb) + " of " +
                                                     std::to_string(n.memory_capacity_mb) + " MB");
    }
  }
}

void Cluster::check_invariants(TimeMs now) const {
  check_memory_bounds();

  std::vector<std::int64_t> reserved(nodes_.size(), 0);
  std::int64_t busy_mb = 0;
  std::int64_t live = 0;
  for (const auto& inst : instances_) {
    if (inst.removed) continue;
    reserved[inst.node] += inst.memory_mb;
    ++live;
    const bool ok = inst.in_flight >= 0 && inst.in_flight <= inst.concurrency_limit &&
                    ((inst.state == InstanceState::Busy) == (inst.in_flight >= 1)) &&
                    (inst.state != InstanceState::Idle || inst.in_flight == 0);
    if (!ok) {
      throw Error(ErrorCode::InvariantViolation, "instance " + std::to_string(inst.id) + " is " +
                                                     to_string(inst.state) + " with " +
                                                     std::to_string(inst.in_flight) + " in flight");
    }
    if (inst.state == InstanceState::Busy) busy_mb += inst.memory_mb;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (reserved[i] != nodes_[i].reserved_memory_mb) {
      throw Error(ErrorCode::InvariantViolation, "node " + std::to_string(i) + " reservation drifted");
    }
  }
  if (busy_mb != busy_memory_mb_ || live != live_instances_) {
    throw Error(ErrorCode::InvariantViolation, "cluster memory bookkeeping drifted");
  }

  // Accounting identity: every worker CPU-ms is a lifecycle charge or background.
  double instance_ms = 0.0;
  for (const auto& n : nodes_) {
    instance_ms += n.instance_ms +
                   static_cast<double>(n.live_instances) * static_cast<double>(std::max<TimeMs>(0, now - n.accrued_at_ms));
  }
  const double expected_worker =
      static_cast<double>(counters_.creations) * cost_.cpu_create_worker_ms +
      static_cast<double>(counters_.teardowns) * cost_.cpu_teardown_worker_ms +
      cost_.idle_background_cpu_ms_per_s * instance_ms / 1000.0 +
      cost_.worker_background_cpu_ms_per_s * static_cast<double>(now) / 1000.0;
  const double expected_master =
      static_cast<double>(counters_.creations + counters_.teardowns) * cost_.cpu_master_per_lifecycle_ms +
      cost_.master_background_cpu_ms_per_s * static_cast<double>(now) / 1000.0;
  const auto totals = cpu_totals(now);
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); };
  if (!close(totals.worker_overhead_ms, expected_worker) || !close(totals.master_overhead_ms, expected_master)) {
    throw Error(ErrorCode::InvariantViolation, "CPU accounting identity violated");
  }
}

}  // namespace faassim
