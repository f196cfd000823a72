// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <memory>

#include "faassim/error.hpp"
#include "faassim/router.hpp"
#include "test_util.hpp"

using namespace faassim;
using faassim::testing::make_plan;

namespace {

struct Rig {
  Rig(InvocationPlan p, PolicyConfig policy_config, TimeMs creation_ms, TimeMs overhead_ms,
      std::int64_t node_memory = 1 << 20)
      : plan(std::move(p)),
        cost(make_cost(creation_ms, overhead_ms)),
        cluster({1, 8, node_memory}, cost, engine, RngStream(1, "creation-delay")),
        recorder(plan.entries.size(), {0, plan.total_duration_ms}),
        policy(make_policy(policy_config, cluster, engine,
                           [this](FunctionIndex f) { return plan.functions.at(f).memory_mb; })),
        router(plan, cluster, *policy, recorder, RngStream(1, "warm-overhead")) {
    cluster.set_observer(&recorder);
    for (std::uint64_t i = 0; i < plan.entries.size(); ++i) {
      engine.schedule(plan.entries[i].arrival_ms, EventKind::RequestArrival, i);
    }
  }

  static CostModel make_cost(TimeMs creation_ms, TimeMs overhead_ms) {
    CostModel c;
    c.creation_delay_ms = Distribution::fixed(static_cast<double>(creation_ms));
    c.warm_path_overhead_ms = Distribution::fixed(static_cast<double>(overhead_ms));
    return c;
  }

  void run(TimeMs until = kForever) {
    engine.run(until, [&](const SimEvent& ev) {
      switch (ev.kind) {
        case EventKind::RequestArrival: router.on_arrival(ev.subject, ev.fire_at); break;
        case EventKind::InstanceReady:
          cluster.mark_ready(ev.subject, ev.fire_at);
          router.on_instance_ready(ev.subject, ev.fire_at);
          break;
        case EventKind::RequestComplete: router.on_completion(ev.subject, ev.aux, ev.fire_at); break;
        case EventKind::IdleExpiry:
          if (policy->on_idle_expiry(ev.subject, static_cast<TimeMs>(ev.aux), ev.fire_at)) {
            router.on_capacity_released(ev.fire_at);
          }
          break;
        default: break;
      }
    });
  }

  const InvocationRecord& rec(std::size_t i) const { return recorder.records().at(i); }

  InvocationPlan plan;
  CostModel cost;
  Engine engine;
  Cluster cluster;
  MetricsRecorder recorder;
  std::unique_ptr<AutoscalingPolicy> policy;
  Router router;
};

PolicyConfig sync_policy(TimeMs keepalive = 600000) {
  PolicyConfig p;
  p.keepalive_ms = keepalive;
  return p;
}

PolicyConfig async_policy(int cc) {
  PolicyConfig p;
  p.variant = PolicyVariant::AsyncWindow;
  p.container_concurrency = cc;
  return p;
}

}  // namespace

TEST_CASE("warm dispatch pays the warm-path overhead") {
  Rig r(make_plan({{"f", 128}}, {{0, 0, 100}, {0, 5000, 100}}), sync_policy(), 1000, 7);
  r.run();
  CHECK(r.rec(1).dispatch_ms == 5007);
  CHECK(r.rec(1).completion_ms == 5107);
  CHECK_FALSE(r.rec(1).cold);
}

TEST_CASE("sync cold start waits for creation plus overhead") {
  Rig r(make_plan({{"f", 128}}, {{0, 2000, 100}}), sync_policy(), 1000, 7);
  r.run();
  CHECK(r.rec(0).dispatch_ms == 3007);
  CHECK(r.rec(0).queueing_ms() == 1007);
  CHECK(r.rec(0).cold);
}

TEST_CASE("sync reuses an idle instance and creates for overlapping arrivals") {
  Rig r(make_plan({{"f", 128}}, {{0, 0, 100}, {0, 1500, 5000}, {0, 1600, 100}}), sync_policy(), 1000, 0);
  r.run();
  CHECK(r.cluster.counters().creations == 2);
  CHECK(r.rec(1).dispatch_ms == 1500);
  CHECK_FALSE(r.rec(1).cold);
  CHECK(r.rec(2).dispatch_ms == 2600);
  CHECK(r.rec(2).cold);
}

TEST_CASE("sync completion does not steal a bound request") {
  // Request 1 arrives while request 0 runs; it binds to a new instance that is
  // ready at 2200, even though instance 1 frees up at 1400.
  Rig r(make_plan({{"f", 128}}, {{0, 0, 400}, {0, 1200, 100}}), sync_policy(), 1000, 0);
  r.run();
  CHECK(r.cluster.counters().creations == 2);
  CHECK(r.rec(1).dispatch_ms == 2200);
}

TEST_CASE("async dispatches into a free slot of a busy instance") {
  Rig r(make_plan({{"f", 128}}, {{0, 0, 10000}, {0, 0, 10000}, {0, 1100, 10000}}), async_policy(4), 1000, 0);
  r.run(0);
  r.policy->record_sample(0, 0, 2.0);
  REQUIRE(r.policy->evaluate(0, 0, r.router.queued(0)).created.size() == 1);
  r.run(1000);
  CHECK(r.rec(0).dispatch_ms == 1000);
  CHECK(r.rec(1).dispatch_ms == 1000);
  CHECK(r.cluster.instance(1).in_flight == 2);
  r.run(1100);
  CHECK(r.rec(2).dispatch_ms == 1100);
  CHECK_FALSE(r.rec(2).cold);
  CHECK(r.cluster.instance(1).in_flight == 3);
}

TEST_CASE("async instance drains up to its concurrency from the queue") {
  Rig r(make_plan({{"f", 128}}, {{0, 0, 500}, {0, 0, 500}, {0, 0, 500}}), async_policy(2), 1000, 0);
  r.run(0);
  CHECK(r.router.queued(0) == 3);
  r.policy->record_sample(0, 0, 0.5);
  REQUIRE(r.policy->evaluate(0, 0, r.router.queued(0)).created.size() == 1);
  r.run(1000);
  CHECK(r.router.queued(0) == 1);
  CHECK(r.cluster.instance(1).in_flight == 2);
  r.run();
  // The queued request takes the slot at the completion instant.
  CHECK(r.rec(2).dispatch_ms == 1500);
  CHECK(r.rec(2).cold);
  CHECK(r.cluster.instance(1).state == InstanceState::Idle);
  CHECK(r.cluster.instance(1).idle_since_ms == 2000);
}

TEST_CASE("async instance goes idle when nothing is queued") {
  Rig r(make_plan({{"f", 128}}, {{0, 0, 500}}), async_policy(1), 1000, 0);
  r.run(0);
  r.policy->record_sample(0, 0, 1.0);
  r.policy->evaluate(0, 0, r.router.queued(0));
  r.run();
  CHECK(r.cluster.instance(1).state == InstanceState::Idle);
  CHECK(r.cluster.instance(1).idle_since_ms == 1500);
  CHECK(r.router.outstanding() == 0);
}

TEST_CASE("later async arrivals queue behind earlier ones") {
  Rig r(make_plan({{"f", 128}}, {{0, 0, 500}, {0, 10, 500}}), async_policy(1), 1000, 0);
  r.run(0);
  r.policy->record_sample(0, 0, 0.7);
  r.policy->evaluate(0, 0, r.router.queued(0));
  r.run();
  CHECK(r.rec(0).dispatch_ms == 1000);
  CHECK(r.rec(1).dispatch_ms == 1500);
}

TEST_CASE("sync request blocked on memory proceeds after a teardown") {
  // Node fits one 512 MB instance. g waits until f's instance expires.
  Rig r(make_plan({{"f", 512}, {"g", 512}}, {{0, 0, 100}, {1, 500, 100}}), sync_policy(2000), 1000, 0, 512);
  r.run();
  CHECK(r.rec(0).dispatch_ms == 1000);
  // f idles at 1100, expires at 3100; g is created then and ready at 4100.
  CHECK(r.rec(1).dispatch_ms == 4100);
  CHECK(r.rec(1).cold);
  CHECK(r.router.waiting_for_memory() == 0);
}

TEST_CASE("a same-function memory waiter reuses the freed instance") {
  Rig r(make_plan({{"f", 512}}, {{0, 0, 1500}, {0, 200, 100}}), sync_policy(), 1000, 0, 512);
  r.run();
  CHECK(r.cluster.counters().creations == 1);
  CHECK(r.rec(1).dispatch_ms == 2500);
}
