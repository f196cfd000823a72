// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "faassim/error.hpp"
#include "faassim/metrics.hpp"
#include "faassim/simulation.hpp"
#include "test_util.hpp"

using namespace faassim;
using faassim::testing::make_plan;
using faassim::testing::read_file;
using faassim::testing::TempDir;

namespace {

UsageSample counters_at(TimeMs t, std::uint64_t creations, std::uint64_t teardowns, double work, double worker,
                        double master) {
  UsageSample s;
  s.timestamp_ms = t;
  s.creations = creations;
  s.teardowns = teardowns;
  s.function_work_ms = work;
  s.worker_overhead_ms = worker;
  s.master_overhead_ms = master;
  return s;
}

// Independent nearest-rank oracle: smallest value with at least p% of samples at or below it.
double nearest_rank_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  for (double x : v) {
    const auto le = std::count_if(v.begin(), v.end(), [&](double y) { return y <= x; });
    if (static_cast<double>(le) >= p / 100.0 * static_cast<double>(v.size()) - 1e-9) return x;
  }
  return v.back();
}

}  // namespace

TEST_CASE("per-function p99 uses nearest rank") {
  const std::vector<double> one = {3.0};
  CHECK(per_function_p99(one) == 3.0);

  std::vector<double> hundred(100);
  std::iota(hundred.begin(), hundred.end(), 1.0);
  CHECK(per_function_p99(hundred) == 99.0);

  const std::vector<double> ones(50, 1.0);
  CHECK(per_function_p99(ones) == 1.0);

  CHECK_THROWS_AS(per_function_p99(std::vector<double>{}), Error);
}

TEST_CASE("p99 agrees with a brute-force nearest-rank oracle") {
  RngStream rng(9, "p99");
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(rng.uniform_int(1, 400)));
    for (auto& x : v) x = 1.0 + static_cast<double>(rng.uniform_int(0, 50));
    CHECK(per_function_p99(v) == nearest_rank_oracle(v, 99.0));
    const auto lo = *std::min_element(v.begin(), v.end());
    const auto hi = *std::max_element(v.begin(), v.end());
    CHECK(per_function_p99(v) >= lo);
    CHECK(per_function_p99(v) <= hi);
  }
}

TEST_CASE("aggregate slowdown is the geometric mean") {
  CHECK(aggregate_slowdown(std::vector<double>{2.0, 8.0}) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(aggregate_slowdown(std::vector<double>{1.0, 1.0, 1.0}) == 1.0);
  CHECK(aggregate_slowdown(std::vector<double>{1.5, 2.5, 6.0}) == doctest::Approx(std::cbrt(1.5 * 2.5 * 6.0)));
  CHECK(aggregate_slowdown(std::vector<double>{1.5, 2.5, 6.0}) == doctest::Approx(2.823).epsilon(1e-3));
  try {
    aggregate_slowdown(std::vector<double>{1.0, 0.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveSlowdown);
  }
}

TEST_CASE("geometric mean sits between min and max and scales linearly") {
  RngStream rng(4, "geo");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(rng.uniform_int(1, 30)));
    for (auto& x : v) x = 1.0 + 10.0 * rng.next_unit();
    const double g = aggregate_slowdown(v);
    CHECK(g >= *std::min_element(v.begin(), v.end()) - 1e-12);
    CHECK(g <= *std::max_element(v.begin(), v.end()) + 1e-12);
    std::vector<double> doubled = v;
    for (auto& x : doubled) x *= 2.0;
    CHECK(aggregate_slowdown(doubled) == doctest::Approx(2.0 * g));
  }
}

TEST_CASE("normalized memory integrates step functions") {
  const MeasurementWindow w{0, 40000};
  const std::vector<MemoryStep> half_busy = {{0, 256, 128}};
  CHECK(normalized_memory(half_busy, w) == doctest::Approx(2.0));

  const std::vector<MemoryStep> all_busy = {{0, 512, 512}};
  CHECK(normalized_memory(all_busy, w) == doctest::Approx(1.0));

  // Busy for 10 s, then idle for 30 s: (40 * 128) / (10 * 128).
  const std::vector<MemoryStep> busy_then_idle = {{0, 128, 128}, {10000, 128, 0}};
  CHECK(normalized_memory(busy_then_idle, w) == doctest::Approx(4.0));

  const std::vector<MemoryStep> never_busy = {{0, 128, 0}};
  CHECK_FALSE(normalized_memory(never_busy, w).has_value());
}

TEST_CASE("normalized memory only counts the window") {
  const std::vector<MemoryStep> steps = {{0, 1000, 0}, {10000, 128, 128}, {20000, 128, 0}};
  CHECK(normalized_memory(steps, {10000, 20000}) == doctest::Approx(1.0));
  CHECK(normalized_memory(steps, {15000, 25000}) == doctest::Approx(2.0));
}

TEST_CASE("streaming integrator agrees with the batch integral") {
  RngStream rng(12, "integrator");
  const MeasurementWindow w{5000, 95000};
  StepIntegrator it(w);
  std::vector<MemoryStep> steps;
  TimeMs t = 0;
  for (int i = 0; i < 300; ++i) {
    const auto busy = rng.uniform_int(0, 2000);
    const auto total = busy + rng.uniform_int(1, 2000);
    steps.push_back({t, total, busy});
    it.change(t, total, busy);
    t += rng.uniform_int(0, 600);
  }
  const auto [total, busy] = it.integrals_until(w.end_ms);
  CHECK(total / busy == doctest::Approx(*normalized_memory(steps, w)));
  CHECK(total / busy >= 1.0);
}

TEST_CASE("creation rate is counted over the window") {
  const MeasurementWindow w{10000, 20000};
  const std::vector<UsageSample> none = {counters_at(0, 0, 0, 0, 0, 0), counters_at(10000, 0, 0, 0, 0, 0),
                                         counters_at(20000, 0, 0, 0, 0, 0)};
  CHECK(creation_rate(none, w).creation_per_s == 0.0);

  const std::vector<UsageSample> some = {counters_at(0, 4, 0, 0, 0, 0), counters_at(10000, 5, 1, 0, 0, 0),
                                         counters_at(15000, 9, 3, 0, 0, 0), counters_at(20000, 25, 6, 0, 0, 0)};
  CHECK(creation_rate(some, w).creation_per_s == doctest::Approx(2.0));
  CHECK(creation_rate(some, w).teardown_per_s == doctest::Approx(0.5));
}

TEST_CASE("steady periodic load creates and tears down at the same rate") {
  // One request every 20 s; a 5 s keepalive means each one is a fresh instance.
  auto plan = make_plan({{"f", 128}}, {}, 600000, 100000);
  for (TimeMs t = 0; t < 600000; t += 20000) plan.entries.push_back({t, 0, static_cast<std::uint32_t>(t / 20000), 100});
  PolicyConfig p;
  p.keepalive_ms = 5000;
  CostModel c;
  c.creation_delay_ms = Distribution::fixed(1000.0);
  c.cpu_create_worker_ms = 4.0;
  c.cpu_master_per_lifecycle_ms = 1.0;
  const auto rep = simulate(plan, {1, 4, 4096}, c, p, 1);
  CHECK(rep.creation_rate_per_s == doctest::Approx(0.05).epsilon(0.01));
  CHECK(std::abs(rep.creation_rate_per_s - rep.teardown_rate_per_s) <= 1.0 / 500.0 + 1e-12);
  CHECK(rep.cold_start_fraction == 1.0);
}

TEST_CASE("CPU overhead normalizes by function work") {
  const MeasurementWindow w{0, 1000};
  const std::vector<UsageSample> s = {counters_at(0, 0, 0, 0, 0, 0),
                                      counters_at(1000, 0, 0, 1000000.0, 80000.0, 20000.0)};
  const auto o = normalized_cpu_overhead(s, w);
  CHECK(o.total == doctest::Approx(0.10));
  CHECK(o.worker_share == doctest::Approx(0.8));
  CHECK(o.master_share == doctest::Approx(0.2));

  const std::vector<UsageSample> quiet = {counters_at(0, 0, 0, 0, 0, 0), counters_at(1000, 0, 0, 500.0, 0, 0)};
  CHECK(normalized_cpu_overhead(quiet, w).total == 0.0);

  const std::vector<UsageSample> idle = {counters_at(0, 0, 0, 0, 0, 0), counters_at(1000, 0, 0, 0, 5, 5)};
  CHECK_THROWS_AS(normalized_cpu_overhead(idle, w), Error);
}

TEST_CASE("queueing CDF and report exports") {
  MetricsRecorder rec(20, {0, 60000});
  for (std::uint64_t i = 0; i < 20; ++i) {
    const TimeMs t = static_cast<TimeMs>(i) * 1000;
    rec.on_arrival(i, 0, t, 100);
    rec.on_dispatch(i, t + 7, false);
    rec.on_completion(i, t + 107);
  }
  const std::vector<std::string> ids = {"f"};
  auto rep = build_report(rec, ids);
  REQUIRE(rep.queueing_cdf.size() == cdf_permilles().size());
  for (const auto& [p, v] : rep.queueing_cdf) CHECK(v == 7.0);
  CHECK(rep.queueing_cdf.front().first == doctest::Approx(10.0));
  CHECK(rep.queueing_cdf.back().first == doctest::Approx(100.0));
  CHECK(rep.slowdown_geomean_p99 == doctest::Approx(1.07));

  TempDir a("export"), b("export");
  export_report(rep, a.path(), "r");
  export_report(rep, b.path(), "r");
  for (const char* f : {"r.json", "r_cdf.csv", "r_nodes.csv"}) CHECK(read_file(a / f) == read_file(b / f));

  std::vector<ExperimentReport> four(4, rep);
  write_summary_csv(four, a / "summary.csv");
  const auto csv = read_file(a / "summary.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.rfind(summary_csv_header(), 0) == 0);
}

TEST_CASE("warm-up invocations are excluded") {
  MetricsRecorder rec(2, {1000, 60000});
  rec.on_arrival(0, 0, 0, 100);
  rec.on_dispatch(0, 5000, true);
  rec.on_completion(0, 5100);
  rec.on_arrival(1, 0, 2000, 100);
  rec.on_dispatch(1, 2000, false);
  rec.on_completion(1, 2100);
  const std::vector<std::string> ids = {"f"};
  const auto rep = build_report(rec, ids);
  CHECK(rep.measured_invocations == 1);
  CHECK(rep.cold_start_fraction == 0.0);
  CHECK(rep.slowdown_geomean_p99 == doctest::Approx(1.0));
}

TEST_CASE("an empty workload yields undefined aggregates") {
  InvocationPlan plan;
  plan.total_duration_ms = 60000;
  PolicyConfig p;
  const auto rep = simulate(plan, {1, 4, 1024}, CostModel{}, p, 1);
  CHECK(rep.invocations == 0);
  CHECK_FALSE(rep.slowdown_geomean_p99.has_value());
  CHECK_FALSE(rep.normalized_memory.has_value());
  CHECK_FALSE(rep.cpu_overhead.has_value());
  CHECK(rep.creation_rate_per_s == 0.0);
  CHECK(rep.queueing_cdf.empty());
}

TEST_CASE("recorder rejects double dispatch and completion") {
  MetricsRecorder rec(1, {0, 1000});
  rec.on_arrival(0, 0, 0, 10);
  rec.on_dispatch(0, 0, false);
  CHECK_THROWS_AS(rec.on_dispatch(0, 1, false), Error);
  rec.on_completion(0, 10);
  CHECK_THROWS_AS(rec.on_completion(0, 11), Error);
}
