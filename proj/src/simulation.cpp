// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/simulation.hpp"

#include <algorithm>
#include <string>

#include "faassim/engine.hpp"
#include "faassim/error.hpp"
#include "faassim/router.hpp"

namespace faassim {
namespace {

UsageSample take_sample(const Cluster& cluster, TimeMs now) {
  const auto usage = cluster.snapshot_usage(now);
  const auto cpu = cluster.cpu_totals(now);
  UsageSample s;
  s.timestamp_ms = now;
  s.total_instance_memory_mb = usage.total_instance_memory_mb;
  s.busy_instance_memory_mb = usage.busy_instance_memory_mb;
  s.live_instances = usage.live_instances;
  s.creations = cluster.counters().creations;
  s.teardowns = cluster.counters().teardowns;
  s.function_work_ms = cpu.function_work_ms;
  s.worker_overhead_ms = cpu.worker_overhead_ms;
  s.master_overhead_ms = cpu.master_overhead_ms;
  s.node_utilization = usage.node_utilization;
  return s;
}

void check_conservation(const InvocationPlan& plan, const MetricsRecorder& recorder, const Router& router) {
  const auto n = plan.entries.size();
  if (recorder.dispatched() != n || recorder.completed() != n || router.outstanding() != 0) {
    throw Error(ErrorCode::InvariantViolation,
                "conservation: " + std::to_string(n) + " arrivals, " + std::to_string(recorder.dispatched()) +
                    " dispatched, " + std::to_string(recorder.completed()) + " completed");
  }
}

}  // namespace

ExperimentReport simulate(const InvocationPlan& plan, const ClusterShape& shape, const CostModel& cost,
                          const PolicyConfig& policy_config, std::uint64_t seed, const SimulationOptions& options) {
  shape.validate();
  cost.validate();
  policy_config.validate();
  if (options.metrics_period_ms <= 0) {
    throw Error(ErrorCode::InvalidArgument, "metrics period must be > 0");
  }

  Engine engine;
  engine.set_event_log(options.event_log);
  Cluster cluster(shape, cost, engine, RngStream(seed, "creation-delay"));
  const MeasurementWindow window{plan.warmup_cutoff_ms, plan.total_duration_ms};
  MetricsRecorder recorder(plan.entries.size(), window);
  cluster.set_observer(&recorder);
  auto policy = make_policy(policy_config, cluster, engine,
                            [&plan](FunctionIndex f) { return plan.functions.at(f).memory_mb; });
  Router router(plan, cluster, *policy, recorder, RngStream(seed, "warm-overhead"));
  const bool async = policy_config.variant == PolicyVariant::AsyncWindow;
  const auto functions = static_cast<FunctionIndex>(plan.functions.size());

  if (!plan.entries.empty()) engine.schedule(plan.entries.front().arrival_ms, EventKind::RequestArrival, 0);
  if (async) engine.schedule(policy_config.sample_period_ms, EventKind::ConcurrencySample);

  // Metrics samples at every period boundary plus both window edges.
  std::vector<TimeMs> sample_times{0};
  for (TimeMs t = options.metrics_period_ms; t < window.end_ms; t += options.metrics_period_ms) sample_times.push_back(t);
  sample_times.push_back(window.start_ms);
  sample_times.push_back(window.end_ms);
  std::sort(sample_times.begin(), sample_times.end());
  sample_times.erase(std::unique(sample_times.begin(), sample_times.end()), sample_times.end());
  std::size_t next_sample = 0;
  engine.schedule(sample_times[next_sample++], EventKind::MetricsSample);

  auto handler = [&](const SimEvent& ev) {
    const TimeMs now = ev.fire_at;
    switch (ev.kind) {
      case EventKind::RequestArrival: {
        router.on_arrival(ev.subject, now);
        const auto next = ev.subject + 1;
        if (next < plan.entries.size()) {
          engine.schedule(plan.entries[next].arrival_ms, EventKind::RequestArrival, next);
        }
        break;
      }
      case EventKind::InstanceReady:
        cluster.mark_ready(ev.subject, now);
        router.on_instance_ready(ev.subject, now);
        break;
      case EventKind::RequestComplete:
        router.on_completion(ev.subject, ev.aux, now);
        break;
      case EventKind::IdleExpiry:
        if (policy->on_idle_expiry(ev.subject, static_cast<TimeMs>(ev.aux), now)) router.on_capacity_released(now);
        break;
      case EventKind::ConcurrencySample: {
        for (FunctionIndex f = 0; f < functions; ++f) {
          const double conc = cluster.function_counts(f).in_flight + static_cast<double>(router.queued(f));
          policy->record_sample(f, now, conc);
        }
        if (now % policy_config.evaluation_period_ms == 0) engine.schedule(now, EventKind::ScaleEvaluation);
        if (now < window.end_ms || router.outstanding() > 0) {
          engine.schedule(now + policy_config.sample_period_ms, EventKind::ConcurrencySample);
        }
        break;
      }
      case EventKind::ScaleEvaluation:
        for (FunctionIndex f = 0; f < functions; ++f) policy->evaluate(f, now, router.queued(f));
        break;
      case EventKind::MetricsSample:
        if (options.check_invariants) cluster.check_invariants(now);
        recorder.add_sample(take_sample(cluster, now));
        if (next_sample < sample_times.size()) engine.schedule(sample_times[next_sample++], EventKind::MetricsSample);
        break;
    }
    if (options.check_invariants) cluster.check_memory_bounds();
  };

  engine.run(kForever, handler);
  check_conservation(plan, recorder, router);
  if (options.check_invariants) cluster.check_invariants(engine.now());

  std::vector<std::string> ids;
  ids.reserve(plan.functions.size());
  for (const auto& f : plan.functions) ids.push_back(f.id);
  auto report = build_report(recorder, ids);
  if (options.records) *options.records = recorder.records();
  report.events_processed = engine.events_processed();
  report.plan_checksum = plan.checksum();
  report.seed = seed;
  for (const auto& node : cluster.nodes()) {
    report.peak_node_utilization.push_back(static_cast<double>(node.peak_running_requests) / node.cores);
  }
  return report;
}

}  // namespace faassim
