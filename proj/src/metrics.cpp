// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv.hpp"
#include "faassim/error.hpp"

namespace faassim {

namespace {

std::size_t nearest_rank_index(std::size_t n, std::size_t num, std::size_t den) {
  // ceil(num / den * n), 1-based, clamped to [1, n].
  const std::size_t rank = (num * n + den - 1) / den;
  return std::clamp<std::size_t>(rank, 1, n) - 1;
}

const UsageSample* sample_at(std::span<const UsageSample> samples, TimeMs t) {
  const UsageSample* found = nullptr;
  for (const auto& s : samples) {
    if (s.timestamp_ms > t) break;
    found = &s;
  }
  return found;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

double per_function_p99(std::span<const double> slowdowns) {
  if (slowdowns.empty()) throw Error(ErrorCode::EmptyFunction, "no completed invocations after warm-up");
  std::vector<double> sorted(slowdowns.begin(), slowdowns.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[nearest_rank_index(sorted.size(), 99, 100)];
}

double nearest_rank_permille(std::span<const double> sorted, int permille) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyFunction, "percentile of an empty sample");
  return sorted[nearest_rank_index(sorted.size(), static_cast<std::size_t>(permille), 1000)];
}

double aggregate_slowdown(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyFunction, "geometric mean of no values");
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw Error(ErrorCode::NonPositiveSlowdown, "slowdown " + csv::format_double(v));
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

std::optional<double> normalized_memory(std::span<const MemoryStep> steps, MeasurementWindow window) {
  double total = 0.0;
  double busy = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const TimeMs from = std::max(steps[i].at, window.start_ms);
    const TimeMs to = std::min(i + 1 < steps.size() ? steps[i + 1].at : window.end_ms, window.end_ms);
    if (to <= from) continue;
    const auto dt = static_cast<double>(to - from);
    total += static_cast<double>(steps[i].total_mb) * dt;
    busy += static_cast<double>(steps[i].busy_mb) * dt;
  }
  if (busy <= 0.0) return std::nullopt;
  return total / busy;
}

RatePair creation_rate(std::span<const UsageSample> samples, MeasurementWindow window) {
  if (window.end_ms <= window.start_ms) {
    throw Error(ErrorCode::InvalidArgument, "creation_rate: window length must be > 0");
  }
  const auto* a = sample_at(samples, window.start_ms);
  const auto* b = sample_at(samples, window.end_ms);
  RatePair r;
  if (b == nullptr) return r;
  const std::uint64_t c0 = a != nullptr ? a->creations : 0;
  const std::uint64_t t0 = a != nullptr ? a->teardowns : 0;
  r.creation_per_s = static_cast<double>(b->creations - c0) / window.seconds();
  r.teardown_per_s = static_cast<double>(b->teardowns - t0) / window.seconds();
  return r;
}

CpuOverhead normalized_cpu_overhead(std::span<const UsageSample> samples, MeasurementWindow window) {
  const auto* a = sample_at(samples, window.start_ms);
  const auto* b = sample_at(samples, window.end_ms);
  if (b == nullptr) throw Error(ErrorCode::ZeroUsefulWork, "no usage samples in the window");
  const UsageSample zero{};
  if (a == nullptr) a = &zero;
  const double work = b->function_work_ms - a->function_work_ms;
  if (!(work > 0.0)) throw Error(ErrorCode::ZeroUsefulWork, "no function work inside the window");
  const double worker = b->worker_overhead_ms - a->worker_overhead_ms;
  const double master = b->master_overhead_ms - a->master_overhead_ms;
  CpuOverhead o;
  o.worker = worker / work;
  o.master = master / work;
  o.total = o.worker + o.master;
  const double sum = worker + master;
  o.worker_share = sum > 0.0 ? worker / sum : 0.0;
  o.master_share = sum > 0.0 ? master / sum : 0.0;
  return o;
}

// --- StepIntegrator ---------------------------------------------------------------

void StepIntegrator::change(TimeMs at, std::int64_t total_mb, std::int64_t busy_mb) {
  const TimeMs from = std::max(last_, window_.start_ms);
  const TimeMs to = std::min(at, window_.end_ms);
  if (to > from) {
    total_integral_ += static_cast<double>(total_) * static_cast<double>(to - from);
    busy_integral_ += static_cast<double>(busy_) * static_cast<double>(to - from);
  }
  last_ = std::max(last_, at);
  total_ = total_mb;
  busy_ = busy_mb;
}

std::pair<double, double> StepIntegrator::integrals_until(TimeMs at) const {
  double total = total_integral_;
  double busy = busy_integral_;
  const TimeMs from = std::max(last_, window_.start_ms);
  const TimeMs to = std::min(at, window_.end_ms);
  if (to > from) {
    total += static_cast<double>(total_) * static_cast<double>(to - from);
    busy += static_cast<double>(busy_) * static_cast<double>(to - from);
  }
  return {total, busy};
}

// --- MetricsRecorder ------------------------------------------------------------------

MetricsRecorder::MetricsRecorder(std::size_t invocations, MeasurementWindow window)
    : window_(window), records_(invocations), integrator_(window) {}

void MetricsRecorder::on_arrival(std::uint64_t invocation, FunctionIndex function, TimeMs arrival,
                                 std::int64_t duration_ms) {
  auto& r = records_.at(invocation);
  r.function = function;
  r.arrival_ms = arrival;
  r.expected_duration_ms = duration_ms;
}

void MetricsRecorder::on_dispatch(std::uint64_t invocation, TimeMs dispatch, bool cold) {
  auto& r = records_.at(invocation);
  if (r.dispatch_ms >= 0) {
    throw Error(ErrorCode::InvariantViolation, "invocation " + std::to_string(invocation) + " dispatched twice");
  }
  r.dispatch_ms = dispatch;
  r.cold = cold;
  ++dispatched_;
}

void MetricsRecorder::on_completion(std::uint64_t invocation, TimeMs completion) {
  auto& r = records_.at(invocation);
  if (r.completion_ms >= 0 || r.dispatch_ms < 0) {
    throw Error(ErrorCode::InvariantViolation,
                "invocation " + std::to_string(invocation) + " completed twice or before dispatch");
  }
  r.completion_ms = completion;
  ++completed_;
}

void MetricsRecorder::on_memory_change(TimeMs now, std::int64_t total_mb, std::int64_t busy_mb) {
  integrator_.change(now, total_mb, busy_mb);
}

// --- report ------------------------------------------------------------------------

std::vector<int> cdf_permilles() {
  std::vector<int> out;
  for (int p = 100; p <= 900; p += 100) out.push_back(p);
  for (int p = 901; p <= 1000; ++p) out.push_back(p);
  return out;
}

ExperimentReport build_report(const MetricsRecorder& recorder, std::span<const std::string> function_ids) {
  ExperimentReport rep;
  const auto window = recorder.window();
  const auto& records = recorder.records();
  rep.invocations = records.size();

  std::vector<std::vector<double>> per_function(function_ids.size());
  std::vector<double> queueing;
  std::size_t cold = 0;
  for (const auto& r : records) {
    if (r.arrival_ms < window.start_ms || !r.completed()) continue;
    per_function.at(r.function).push_back(r.slowdown());
    queueing.push_back(static_cast<double>(r.queueing_ms()));
    if (r.cold) ++cold;
  }
  rep.measured_invocations = queueing.size();
  rep.cold_start_fraction =
      queueing.empty() ? 0.0 : static_cast<double>(cold) / static_cast<double>(queueing.size());

  std::vector<double> p99s;
  for (std::size_t f = 0; f < per_function.size(); ++f) {
    if (per_function[f].empty()) {
      ++rep.excluded_functions;
      continue;
    }
    const double p = per_function_p99(per_function[f]);
    rep.per_function_p99.emplace_back(function_ids[f], p);
    p99s.push_back(p);
  }
  if (!p99s.empty()) rep.slowdown_geomean_p99 = aggregate_slowdown(p99s);

  const auto [total, busy] = recorder.memory_integrals();
  if (busy > 0.0) rep.normalized_memory = total / busy;

  const auto& samples = recorder.samples();
  const auto rates = creation_rate(samples, window);
  rep.creation_rate_per_s = rates.creation_per_s;
  rep.teardown_rate_per_s = rates.teardown_per_s;
  try {
    rep.cpu_overhead = normalized_cpu_overhead(samples, window);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroUsefulWork) throw;
  }

  std::sort(queueing.begin(), queueing.end());
  if (!queueing.empty()) {
    for (int pm : cdf_permilles()) {
      rep.queueing_cdf.emplace_back(pm / 10.0, nearest_rank_permille(queueing, pm));
    }
  }
  rep.timeseries = samples;
  return rep;
}

nlohmann::ordered_json ExperimentReport::to_json() const {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["slowdown_geomean_p99"] = opt(slowdown_geomean_p99);
  j["normalized_memory"] = opt(normalized_memory);
  j["creation_rate_per_s"] = creation_rate_per_s;
  j["teardown_rate_per_s"] = teardown_rate_per_s;
  if (cpu_overhead) {
    j["cpu_overhead_total"] = cpu_overhead->total;
    j["cpu_overhead_worker_share"] = cpu_overhead->worker_share;
    j["cpu_overhead_master_share"] = cpu_overhead->master_share;
    j["cpu_overhead_worker"] = cpu_overhead->worker;
    j["cpu_overhead_master"] = cpu_overhead->master;
  } else {
    for (const char* k : {"cpu_overhead_total", "cpu_overhead_worker_share", "cpu_overhead_master_share",
                          "cpu_overhead_worker", "cpu_overhead_master"}) {
      j[k] = nullptr;
    }
  }
  j["cold_start_fraction"] = cold_start_fraction;
  j["excluded_functions"] = excluded_functions;
  j["invocations"] = invocations;
  j["measured_invocations"] = measured_invocations;
  j["events_processed"] = events_processed;
  j["plan_checksum"] = plan_checksum;
  j["seed"] = seed;
  j["peak_node_utilization"] = peak_node_utilization;
  ordered_json p99 = ordered_json::object();
  for (const auto& [id, v] : per_function_p99) p99[id] = v;
  j["per_function_p99"] = std::move(p99);
  ordered_json cdf = ordered_json::array();
  for (const auto& [p, v] : queueing_cdf) cdf.push_back({p, v});
  j["queueing_cdf"] = std::move(cdf);
  ordered_json ts = ordered_json::array();
  for (const auto& s : timeseries) {
    ts.push_back({{"t_ms", s.timestamp_ms},
                  {"total_mb", s.total_instance_memory_mb},
                  {"busy_mb", s.busy_instance_memory_mb},
                  {"live", s.live_instances},
                  {"creations", s.creations},
                  {"teardowns", s.teardowns},
                  {"function_work_ms", s.function_work_ms},
                  {"worker_overhead_ms", s.worker_overhead_ms},
                  {"master_overhead_ms", s.master_overhead_ms}});
  }
  j["timeseries"] = std::move(ts);
  j["config"] = config;
  return j;
}

std::string summary_csv_header() {
  return "policy,keepalive_s,window_s,target,cc,slowdown,norm_mem,creation_rate,cpu_overhead,worker_share";
}

std::string summary_csv_row(const ExperimentReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
  std::string row = r.keys.policy + ',' + r.keys.keepalive_s + ',' + r.keys.window_s + ',' + r.keys.target + ',' +
                    r.keys.cc + ',';
  row += opt(r.slowdown_geomean_p99) + ',' + opt(r.normalized_memory) + ',' +
         csv::format_double(r.creation_rate_per_s) + ',';
  row += r.cpu_overhead ? csv::format_double(r.cpu_overhead->total) + ',' +
                              csv::format_double(r.cpu_overhead->worker_share)
                        : std::string(",");
  return row;
}

void export_report(const ExperimentReport& report, const std::filesystem::path& dir, const std::string& basename) {
  {
    auto out = open_out(dir / (basename + ".json"));
    out << report.to_json().dump(2) << '\n';
  }
  {
    auto out = open_out(dir / (basename + "_cdf.csv"));
    out << "percentile,queueing_ms\n";
    for (const auto& [p, v] : report.queueing_cdf) out << csv::format_double(p) << ',' << csv::format_double(v) << '\n';
  }
  {
    auto out = open_out(dir / (basename + "_nodes.csv"));
    out << "timestamp_ms,node,utilization\n";
    for (const auto& s : report.timeseries) {
      for (std::size_t n = 0; n < s.node_utilization.size(); ++n) {
        out << s.timestamp_ms << ',' << n << ',' << csv::format_double(s.node_utilization[n]) << '\n';
      }
    }
  }
}

void write_summary_csv(std::span<const ExperimentReport> reports, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << summary_csv_header() << '\n';
  for (const auto& r : reports) out << summary_csv_row(r) << '\n';
}

}  // namespace faassim
