// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks on the bundled desk trace, the oracle
// fixtures and the scale configuration. Prints one PASS/FAIL line per
// criterion and exits non-zero when any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "faassim/error.hpp"
#include "faassim/harness.hpp"
#include "faassim/metrics.hpp"
#include "faassim/policy.hpp"

namespace fs = std::filesystem;
using namespace faassim;

namespace {

const fs::path kConfigs(FAASSIM_CONFIG_DIR);
const fs::path kData(FAASSIM_DATA_DIR);

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::size_t count_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
  if (names.size() != count_b) {
    why = "file count differs";
    return false;
  }
  for (const auto& n : names) {
    if (slurp(a / n) != slurp(b / n)) {
      why = n + " differs";
      return false;
    }
  }
  return true;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SweepRun {
  std::string name;
  std::vector<ExperimentReport> reports;
  double seconds = 0.0;
  std::string error;
};

struct Row {
  double slowdown = NAN, memory = NAN, creation = NAN, cpu = NAN, worker_share = NAN;
};

Row row(const ExperimentReport& r) {
  Row out;
  out.slowdown = r.slowdown_geomean_p99.value_or(NAN);
  out.memory = r.normalized_memory.value_or(NAN);
  out.creation = r.creation_rate_per_s;
  if (r.cpu_overhead) {
    out.cpu = r.cpu_overhead->total;
    out.worker_share = r.cpu_overhead->worker_share;
  }
  return out;
}

SweepRun run_named_sweep(const std::string& name, const fs::path& out_dir) {
  SweepRun run;
  run.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SweepOptions opts;
    opts.out_dir = out_dir;
    const auto outcome = run_sweep(load_sweep(kConfigs / (name + ".json")), opts);
    for (const auto& p : outcome.points) {
      if (!p.report) {
        run.error = p.point.basename + ": " + p.error;
        break;
      }
      run.reports.push_back(*p.report);
    }
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = seconds_since(t0);
  return run;
}

/// Checks `get` across consecutive points; dir > 0 means non-decreasing.
void monotone(Verdict& v, const SweepRun& s, const char* metric, double (*get)(const Row&), int dir) {
  for (std::size_t i = 1; i < s.reports.size(); ++i) {
    const double prev = get(row(s.reports[i - 1]));
    const double cur = get(row(s.reports[i]));
    const bool ok = dir > 0 ? cur >= prev : cur <= prev;
    v.require(ok, s.name + " " + metric + " not " + (dir > 0 ? "non-decreasing" : "non-increasing") + " at point " +
                      std::to_string(i) + " (" + fmt(prev) + " -> " + fmt(cur) + ")");
  }
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

void report(int id, const char* title, const Verdict& v, bool& all) {
  std::printf("%s %d %s%s%s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.empty() ? "" : ": ",
              v.detail.c_str());
  std::fflush(stdout);
  all = all && v.pass;
}

template <typename F>
Verdict guarded(F&& body) {
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  return v;
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / ("faassim_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  bool all = true;

  // The trend sweeps feed criteria 1 and 3 to 7.
  std::map<std::string, SweepRun> sweeps;
  for (const char* name : {"sweep_sync_keepalive", "sweep_async_window", "sweep_async_target", "sweep_async_cc"}) {
    sweeps[name] = run_named_sweep(name, scratch / name);
  }
  const auto& ka = sweeps["sweep_sync_keepalive"];
  const auto& win = sweeps["sweep_async_window"];
  const auto& tgt = sweeps["sweep_async_target"];
  const auto& cc = sweeps["sweep_async_cc"];

  report(1, "determinism", guarded([&](Verdict& v) {
           const auto cfg = load_config(kConfigs / "desk_sync.json");
           for (const char* dir : {"run_a", "run_b"}) {
             const auto r = run_experiment(cfg);
             export_report(r, scratch / dir, report_basename(cfg, {}, cfg.seed));
             write_summary_csv(std::span(&r, 1), scratch / dir / "summary.csv");
           }
           std::string why;
           v.require(same_tree(scratch / "run_a", scratch / "run_b", why), "run: " + why);
           const auto again = run_named_sweep("sweep_async_cc", scratch / "cc_again");
           v.require(again.error.empty(), again.error);
           v.require(cc.error.empty(), cc.error);
           v.require(same_tree(scratch / "sweep_async_cc", scratch / "cc_again", why), "sweep: " + why);
         }),
         all);

  report(2, "oracle event logs", guarded([&](Verdict& v) {
           for (const char* variant : {"sync", "async"}) {
             const auto fixture = kData / "fixtures" / (std::string("oracle_") + variant);
             std::ostringstream log;
             run_experiment(load_config(fixture.string() + ".json"), RunOptions{&log});
             v.require(log.str() == slurp(fixture.string() + ".log"), std::string(variant) + " log mismatch");
           }
         }),
         all);

  report(3, "parameter trends", guarded([&](Verdict& v) {
           for (const auto& [name, s] : sweeps) {
             v.require(s.error.empty(), name + ": " + s.error);
             v.require(s.seconds <= 300.0, name + " took " + fmt(s.seconds) + " s");
           }
           if (!v.pass) return;
           for (const SweepRun* s : {&ka, &win}) {
             v.require(s->reports.size() == 5, s->name + " should have 5 points");
             monotone(v, *s, "slowdown", [](const Row& r) { return r.slowdown; }, -1);
             monotone(v, *s, "normalized memory", [](const Row& r) { return r.memory; }, +1);
             monotone(v, *s, "creation rate", [](const Row& r) { return r.creation; }, -1);
             monotone(v, *s, "cpu overhead", [](const Row& r) { return r.cpu; }, -1);
           }
           v.require(tgt.reports.size() == 3, "target sweep should have 3 points");
           monotone(v, tgt, "slowdown", [](const Row& r) { return r.slowdown; }, +1);
           monotone(v, tgt, "normalized memory", [](const Row& r) { return r.memory; }, -1);
           v.require(cc.reports.size() == 3, "cc sweep should have 3 points");
           if (cc.reports.size() == 3) {
             const double ratio = row(cc.reports.front()).cpu / row(cc.reports.back()).cpu;
             v.require(ratio >= 2.0, "cpu overhead cc1/cc4 = " + fmt(ratio));
             v.note("cpu overhead cc1/cc4 = " + fmt(ratio));
           }
           double longest = 0;
           for (const auto& [name, s] : sweeps) longest = std::max(longest, s.seconds);
           v.note("slowest sweep " + fmt(longest, 3) + " s");
         }),
         all);

  report(4, "saturation beyond 600 s", guarded([&](Verdict& v) {
           for (const SweepRun* s : {&ka, &win}) {
             v.require(s->reports.size() == 5, s->name + " incomplete");
             if (s->reports.size() != 5) continue;
             const double s600 = row(s->reports[3]).slowdown;
             const double s1800 = row(s->reports[4]).slowdown;
             const double gain = (s600 - s1800) / s600;
             v.require(gain < 0.15, s->name + " improvement " + fmt(gain));
             v.note(s->name + " improvement " + fmt(gain, 3));
           }
         }),
         all);

  report(5, "calibrated memory and cpu bands", guarded([&](Verdict& v) {
           for (const SweepRun* s : {&ka, &win}) {
             v.require(s->reports.size() == 5, s->name + " incomplete");
             if (s->reports.empty()) continue;
             for (const auto* r : {&s->reports.front(), &s->reports.back()}) {
               const auto x = row(*r);
               v.require(x.memory >= 2.0 && x.memory <= 12.0, s->name + " memory " + fmt(x.memory));
               v.require(x.cpu >= 0.05 && x.cpu <= 0.45, s->name + " cpu " + fmt(x.cpu));
               v.note(s->name + " mem " + fmt(x.memory, 3) + " cpu " + fmt(x.cpu, 3));
             }
           }
         }),
         all);

  report(6, "creation rate vs cpu overhead correlation", guarded([&](Verdict& v) {
           std::vector<double> x, y;
           for (const auto& [name, s] : sweeps) {
             for (const auto& r : s.reports) {
               x.push_back(row(r).creation);
               y.push_back(row(r).cpu);
             }
           }
           v.require(x.size() == 16, "expected 16 sweep points, got " + std::to_string(x.size()));
           const double rho = pearson(x, y);
           v.require(rho >= 0.9, "pearson " + fmt(rho));
           v.note("pearson " + fmt(rho));
         }),
         all);

  report(7, "worker share of overhead", guarded([&](Verdict& v) {
           std::size_t points = 0;
           for (const auto& [name, s] : sweeps) {
             for (const auto& r : s.reports) {
               const double share = row(r).worker_share;
               v.require(std::abs(share - 0.80) <= 0.02, name + " share " + fmt(share));
               ++points;
             }
           }
           v.require(points == 16, "expected 16 sweep points");
         }),
         all);

  report(8, "sync cold-start bimodality", guarded([&](Verdict& v) {
           auto tree = read_json_file(kConfigs / "desk_sync.json");
           apply_override(tree, "cost_model=\"aws-like\"");
           apply_override(tree, "policy.keepalive_ms=600000");
           const auto cfg = parse_config(tree, kConfigs);
           std::vector<InvocationRecord> records;
           RunOptions opts;
           opts.records = &records;
           const auto r = run_experiment(cfg, opts);
           const double lo = 300.0 * 0.9 + 20.0, hi = 300.0 * 1.1 + 30.0;
           std::size_t bad = 0;
           for (const auto& rec : records) {
             const auto q = static_cast<double>(rec.queueing_ms());
             if (!(q <= 30.0 || (q >= lo && q <= hi))) ++bad;
           }
           v.require(bad == 0, std::to_string(bad) + " invocations outside both modes");
           v.require(r.cold_start_fraction >= 0.001 && r.cold_start_fraction <= 0.02,
                     "cold fraction " + fmt(r.cold_start_fraction));
           v.note(std::to_string(records.size()) + " invocations, cold fraction " + fmt(r.cold_start_fraction, 3));
         }),
         all);

  report(9, "metric examples", guarded([&](Verdict& v) {
           v.require(desired_instances(3.5, 0.7, 1) == 5, "desired(3.5, 0.7, 1)");
           v.require(desired_instances(0.0, 0.7, 1) == 0, "desired(0)");
           v.require(desired_instances(3.5, 0.7, 4) == 2, "desired(3.5, 0.7, 4)");

           const std::vector<double> one{3.0};
           std::vector<double> hundred;
           for (int i = 100; i >= 1; --i) hundred.push_back(i);
           const std::vector<double> flat(50, 1.0);
           v.require(per_function_p99(one) == 3.0, "p99 single");
           v.require(per_function_p99(hundred) == 99.0, "p99 1..100");
           v.require(per_function_p99(flat) == 1.0, "p99 constant");

           v.require(std::abs(aggregate_slowdown(std::vector<double>{2, 8}) - 4.0) < 1e-12, "geomean {2, 8}");
           v.require(aggregate_slowdown(std::vector<double>{1, 1, 1}) == 1.0, "geomean ones");
           v.require(std::abs(aggregate_slowdown(std::vector<double>{1.5, 2.5, 6.0}) - 2.823) < 5e-4,
                     "geomean {1.5, 2.5, 6}");

           const MeasurementWindow w{0, 40000};
           const std::vector<MemoryStep> two{{0, 256, 128}};
           const std::vector<MemoryStep> busy{{0, 384, 384}};
           const std::vector<MemoryStep> fixture{{0, 128, 128}, {10000, 128, 0}};
           v.require(normalized_memory(two, w) == 2.0, "memory two live one busy");
           v.require(normalized_memory(busy, w) == 1.0, "memory all busy");
           v.require(normalized_memory(fixture, w) == 4.0, "memory fixture");
         }),
         all);

  report(10, "scale run", guarded([&](Verdict& v) {
           const auto cfg = load_config(kConfigs / "scale.json");
           const auto t0 = std::chrono::steady_clock::now();
           const auto a = scale_mode(cfg);
           const double first = seconds_since(t0);
           const auto b = scale_mode(cfg);
           v.require(first < 1800.0, "took " + fmt(first) + " s");
           v.require(a.to_json().dump() == b.to_json().dump(), "reports differ between runs");
           v.require(a.slowdown_geomean_p99 && a.normalized_memory && a.cpu_overhead, "a metric is undefined");
           for (double u : a.peak_node_utilization) v.require(u <= 1.0, "peak utilization " + fmt(u));
           v.note(std::to_string(a.invocations) + " invocations in " + fmt(first, 3) + " s");
         }),
         all);

  fs::remove_all(scratch);
  return all ? 0 : 1;
}
