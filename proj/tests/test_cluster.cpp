// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <vector>

#include "faassim/cluster.hpp"
#include "faassim/error.hpp"

using namespace faassim;

namespace {

CostModel plain_costs() {
  CostModel c;
  c.creation_delay_ms = Distribution::fixed(1000.0);
  c.cpu_create_worker_ms = 40.0;
  c.cpu_teardown_worker_ms = 10.0;
  c.cpu_master_per_lifecycle_ms = 5.0;
  return c;
}

struct Rig {
  explicit Rig(ClusterShape shape = {1, 4, 4096}, CostModel cost = plain_costs())
      : cluster(shape, cost, engine, RngStream(1, "creation-delay")) {}

  // Pops the next event and applies it to the cluster.
  SimEvent step() {
    SimEvent got{};
    bool fired = false;
    engine.run(kForever, [&](const SimEvent& ev) {
      got = ev;
      fired = true;
      engine.stop();
    });
    REQUIRE(fired);
    return got;
  }

  InstanceId ready(FunctionIndex f, std::int64_t mb, int cc = 1) {
    const auto id = cluster.start_instance(f, mb, cc, engine.now(), 0);
    const auto ev = step();
    REQUIRE(ev.kind == EventKind::InstanceReady);
    cluster.mark_ready(ev.subject, ev.fire_at);
    return id;
  }

  Engine engine;
  Cluster cluster;
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("instance becomes ready after the creation delay") {
  Rig r;
  r.engine.run(5000, [](const SimEvent&) {});
  const auto id = r.cluster.start_instance(0, 128, 1, 5000, 0);
  CHECK(r.cluster.instance(id).state == InstanceState::Creating);
  const auto ev = r.step();
  CHECK(ev.kind == EventKind::InstanceReady);
  CHECK(ev.fire_at == 6000);
  CHECK(ev.subject == id);
  r.cluster.mark_ready(id, ev.fire_at);
  CHECK(r.cluster.instance(id).state == InstanceState::Idle);
  CHECK(r.cluster.instance(id).ready_at_ms == 6000);
  CHECK(r.cluster.instance(id).idle_since_ms == 6000);
}

TEST_CASE("placement picks the node with the most free memory") {
  Rig r({2, 4, 512});
  const auto first = r.cluster.start_instance(0, 384, 1, 0, 0);
  CHECK(r.cluster.instance(first).node == 0);  // tie goes to the lowest id
  const auto second = r.cluster.start_instance(1, 256, 1, 0, 1);
  CHECK(r.cluster.instance(second).node == 1);
  CHECK(code_of([&] { r.cluster.start_instance(2, 300, 1, 0, 2); }) == ErrorCode::ClusterOutOfMemory);
}

TEST_CASE("terminating an idle instance releases its memory") {
  Rig r({1, 4, 2048});
  r.ready(0, 512);
  const auto id = r.ready(1, 256);
  CHECK(r.cluster.nodes()[0].reserved_memory_mb == 768);
  r.cluster.terminate_instance(id, r.engine.now());
  CHECK(r.cluster.nodes()[0].reserved_memory_mb == 512);
  CHECK(r.cluster.instance(id).removed);
  CHECK(r.cluster.counters().teardowns == 1);
}

TEST_CASE("busy instances cannot be terminated") {
  Rig r;
  const auto id = r.ready(0, 128);
  r.cluster.begin_execution(id, 0, 100, r.engine.now());
  CHECK(code_of([&] { r.cluster.terminate_instance(id, r.engine.now()); }) == ErrorCode::TerminateBusyInstance);
}

TEST_CASE("terminating a creating instance cancels its ready event") {
  Rig r;
  const auto id = r.cluster.start_instance(0, 128, 1, 0, 0);
  r.cluster.terminate_instance(id, 0);
  CHECK(r.engine.empty());
  CHECK(r.cluster.function_counts(0).live() == 0);
}

TEST_CASE("master lifecycle CPU is charged per creation and per teardown") {
  Rig r({1, 4, 1 << 20});
  const int n = 7;
  for (int i = 0; i < n; ++i) {
    const auto id = r.ready(0, 128);
    r.cluster.terminate_instance(id, r.engine.now());
  }
  const auto cpu = r.cluster.cpu_totals(r.engine.now());
  CHECK(cpu.master_overhead_ms == doctest::Approx(2.0 * n * 5.0));
  CHECK(cpu.worker_overhead_ms == doctest::Approx(n * (40.0 + 10.0)));
}

TEST_CASE("a full instance rejects more work") {
  Rig r;
  const auto id = r.ready(0, 128, 1);
  r.cluster.begin_execution(id, 0, 100, r.engine.now());
  CHECK(code_of([&] { r.cluster.begin_execution(id, 1, 100, r.engine.now()); }) == ErrorCode::ConcurrencyExceeded);
}

TEST_CASE("completion is scheduled after lead time plus duration and books work") {
  Rig r;
  const auto id = r.ready(0, 128);
  const TimeMs t0 = r.engine.now();
  r.cluster.begin_execution(id, 42, 500, t0);
  const auto ev = r.step();
  CHECK(ev.kind == EventKind::RequestComplete);
  CHECK(ev.fire_at == t0 + 500);
  CHECK(ev.aux == 42);
  r.cluster.finish_execution(id, 500, ev.fire_at);
  CHECK(r.cluster.cpu_totals(ev.fire_at).function_work_ms == doctest::Approx(500.0));
  CHECK(r.cluster.instance(id).state == InstanceState::Idle);
  CHECK(r.cluster.instance(id).idle_since_ms == ev.fire_at);

  r.cluster.begin_execution(id, 43, 50, ev.fire_at, 7);
  CHECK(r.step().fire_at == ev.fire_at + 57);
}

TEST_CASE("overlapping requests on a shared instance add up") {
  Rig r;
  const auto id = r.ready(0, 128, 4);
  const TimeMs t = r.engine.now();
  for (std::uint64_t k = 0; k < 3; ++k) r.cluster.begin_execution(id, k, 100, t);
  CHECK(r.cluster.instance(id).in_flight == 3);
  CHECK(r.cluster.least_loaded_with_slot(0) == id);
  for (int k = 0; k < 3; ++k) {
    const auto ev = r.step();
    r.cluster.finish_execution(id, 100, ev.fire_at);
  }
  CHECK(r.cluster.cpu_totals(r.engine.now()).function_work_ms == doctest::Approx(300.0));
}

TEST_CASE("a shared instance stays busy until its last request finishes") {
  Rig r;
  const auto id = r.ready(0, 128, 2);
  const TimeMs t = r.engine.now();
  r.cluster.begin_execution(id, 0, 100, t);
  r.cluster.begin_execution(id, 1, 200, t);
  auto ev = r.step();
  r.cluster.finish_execution(id, 100, ev.fire_at);
  CHECK(r.cluster.instance(id).state == InstanceState::Busy);
  ev = r.step();
  r.cluster.finish_execution(id, 200, ev.fire_at);
  CHECK(r.cluster.instance(id).state == InstanceState::Idle);
  CHECK(r.cluster.instance(id).idle_since_ms == t + 200);
}

TEST_CASE("memory snapshot counts creating, idle and busy instances") {
  Rig r;
  CHECK(r.cluster.snapshot_usage(0).total_instance_memory_mb == 0);
  CHECK(r.cluster.snapshot_usage(0).busy_instance_memory_mb == 0);

  const auto busy = r.ready(0, 128);
  r.ready(0, 128);
  r.cluster.begin_execution(busy, 0, 100, r.engine.now());
  auto s = r.cluster.snapshot_usage(r.engine.now());
  CHECK(s.total_instance_memory_mb == 256);
  CHECK(s.busy_instance_memory_mb == 128);

  Rig q;
  const auto b = q.ready(0, 128);
  q.cluster.begin_execution(b, 0, 100000, q.engine.now());
  for (std::uint64_t k = 1; k <= 3; ++k) q.cluster.start_instance(0, 128, 1, q.engine.now(), k);
  s = q.cluster.snapshot_usage(q.engine.now());
  CHECK(s.total_instance_memory_mb == 512);
  CHECK(s.busy_instance_memory_mb == 128);
  CHECK(s.creating_instances == 3);
}

TEST_CASE("MRU and oldest idle selection") {
  Rig r;
  const auto a = r.ready(0, 128);
  const auto b = r.ready(0, 128);
  r.cluster.begin_execution(a, 0, 10, r.engine.now());
  r.cluster.begin_execution(b, 1, 20, r.engine.now());
  auto ev = r.step();
  r.cluster.finish_execution(a, 10, ev.fire_at);
  ev = r.step();
  r.cluster.finish_execution(b, 20, ev.fire_at);
  CHECK(r.cluster.most_recent_idle(0) == b);
  CHECK(r.cluster.oldest_idle(0) == a);
  CHECK_FALSE(r.cluster.most_recent_idle(1).has_value());
}

TEST_CASE("background charges accrue with time and live instances") {
  CostModel c = plain_costs();
  c.idle_background_cpu_ms_per_s = 2.0;
  c.worker_background_cpu_ms_per_s = 100.0;
  c.master_background_cpu_ms_per_s = 25.0;
  Rig r({2, 4, 4096}, c);
  r.cluster.start_instance(0, 128, 1, 0, 0);  // live from t=0
  const auto cpu = r.cluster.cpu_totals(10000);
  // 40 create + 2 ms/s * 10 s + 100 ms/s * 10 s
  CHECK(cpu.worker_overhead_ms == doctest::Approx(40.0 + 20.0 + 1000.0));
  CHECK(cpu.master_overhead_ms == doctest::Approx(5.0 + 250.0));
  r.cluster.check_invariants(10000);
}

TEST_CASE("doubling every charge doubles the overhead") {
  auto run = [](double k) {
    CostModel c = plain_costs();
    c.cpu_create_worker_ms *= k;
    c.cpu_teardown_worker_ms *= k;
    c.cpu_master_per_lifecycle_ms *= k;
    c.idle_background_cpu_ms_per_s = 3.0 * k;
    c.worker_background_cpu_ms_per_s = 50.0 * k;
    c.master_background_cpu_ms_per_s = 12.0 * k;
    Rig r({2, 4, 4096}, c);
    for (int i = 0; i < 3; ++i) {
      const auto id = r.ready(0, 256);
      r.cluster.begin_execution(id, 0, 100, r.engine.now());
      const auto ev = r.step();
      r.cluster.finish_execution(id, 100, ev.fire_at);
      r.cluster.terminate_instance(id, ev.fire_at);
    }
    const auto t = r.cluster.cpu_totals(r.engine.now());
    return t.worker_overhead_ms + t.master_overhead_ms;
  };
  CHECK(run(2.0) == doctest::Approx(2.0 * run(1.0)));
  CostModel zero;
  Rig z({1, 1, 1024}, zero);
  CHECK(z.cluster.cpu_totals(60000).worker_overhead_ms == 0.0);
}

TEST_CASE("illegal transitions are rejected") {
  Rig r;
  const auto id = r.cluster.start_instance(0, 128, 1, 0, 0);
  CHECK(code_of([&] { r.cluster.begin_execution(id, 0, 10, 0); }) == ErrorCode::IllegalTransition);
  r.cluster.terminate_instance(id, 0);
  CHECK(code_of([&] { r.cluster.terminate_instance(id, 0); }) == ErrorCode::IllegalTransition);
}

TEST_CASE("profiles differ only in latency") {
  const auto k = CostModel::from_profile("knative-like");
  const auto a = CostModel::from_profile("aws-like");
  CHECK(k.cpu_create_worker_ms == a.cpu_create_worker_ms);
  CHECK(k.creation_delay_ms.min_value() > a.creation_delay_ms.max_value());
  // 4:1 worker to master split on every charge.
  CHECK(k.cpu_create_worker_ms == doctest::Approx(4.0 * k.cpu_master_per_lifecycle_ms));
  CHECK(k.worker_background_cpu_ms_per_s == doctest::Approx(4.0 * k.master_background_cpu_ms_per_s));
  CHECK_THROWS_AS(CostModel::from_profile("gcp-like"), Error);
}
