// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "csv.hpp"
#include "faassim/error.hpp"
#include "faassim/rng.hpp"
#include "faassim/simulation.hpp"

namespace faassim {
namespace {

using nlohmann::ordered_json;

std::string seconds(TimeMs ms) { return csv::format_double(static_cast<double>(ms) / 1000.0); }

SummaryKeys summary_keys(const PolicyConfig& p) {
  SummaryKeys k;
  k.policy = to_string(p.variant);
  if (p.variant == PolicyVariant::SyncKeepalive) {
    k.keepalive_s = seconds(p.keepalive_ms);
  } else {
    k.window_s = seconds(p.window_ms);
    k.target = csv::format_double(p.utilization_target);
    k.cc = std::to_string(p.container_concurrency);
  }
  return k;
}

std::string sanitize(std::string s) {
  for (auto& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
    if (!ok) c = '-';
  }
  return s;
}

std::string value_label(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return csv::format_double(v.get<double>());
  return v.dump();
}

bool is_policy_key(const std::string& key) { return key.rfind("policy.", 0) == 0; }

std::string leaf(const std::string& key) {
  const auto dot = key.rfind('.');
  return dot == std::string::npos ? key : key.substr(dot + 1);
}

}  // namespace

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("FAAS_SIM_OUT"); env != nullptr && *env != '\0') return env;
  return "out";
}

InvocationPlan build_plan(const ExperimentConfig& config, std::uint64_t seed) {
  const auto& w = config.workload;
  std::vector<FunctionProfile> profiles;
  switch (w.source) {
    case WorkloadConfig::Source::Plan:
      return load_plan(config.resolve(w.plan_path), w.experiment_minutes, w.warmup_minutes);
    case WorkloadConfig::Source::Trace:
      profiles = parse_trace({config.resolve(w.invocations_path), config.resolve(w.durations_path),
                              config.resolve(w.memory_path)});
      break;
    case WorkloadConfig::Source::Synthetic:
      profiles = gen_synthetic_trace(w.synthetic, seed);
      break;
  }
  if (w.sample_k > 0) profiles = sample_functions(profiles, w.sample_k, seed);
  return generate_invocations(profiles, w.experiment_minutes, w.warmup_minutes, seed);
}

ExperimentReport run_plan(const ExperimentConfig& config, const InvocationPlan& plan, std::uint64_t seed,
                          const RunOptions& options) {
  SimulationOptions sim;
  sim.check_invariants = config.check_invariants;
  sim.metrics_period_ms = config.metrics_period_ms;
  sim.event_log = options.event_log;
  sim.records = options.records;
  auto report = simulate(plan, config.cluster, config.cost_model, config.policy, seed, sim);
  report.keys = summary_keys(config.policy);
  report.config = to_json(config);
  report.config["seed"] = seed;
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto plan = build_plan(config, config.seed);
  return run_plan(config, plan, config.seed, options);
}

ExperimentReport scale_mode(ExperimentConfig config, const RunOptions& options) {
  if (config.cluster.nodes < 50) {
    throw Error(ErrorCode::InvalidArgument,
                "scale mode needs >= 50 nodes, config has " + std::to_string(config.cluster.nodes));
  }
  config.check_invariants = true;
  const auto plan = build_plan(config, config.seed);
  if (plan.functions.size() < 2000) {
    throw Error(ErrorCode::InsufficientFunctions,
                "scale mode needs >= 2000 functions, plan has " + std::to_string(plan.functions.size()));
  }
  return run_plan(config, plan, config.seed, options);
}

std::string report_basename(const ExperimentConfig& config,
                            const std::vector<std::pair<std::string, std::string>>& extra_axes, std::uint64_t seed) {
  const auto& p = config.policy;
  std::string name = to_string(p.variant);
  if (p.variant == PolicyVariant::SyncKeepalive) {
    name += "_ka" + seconds(p.keepalive_ms) + "s";
  } else {
    name += "_w" + seconds(p.window_ms) + "s_u" + csv::format_double(p.utilization_target) + "_cc" +
            std::to_string(p.container_concurrency);
  }
  for (const auto& [key, value] : extra_axes) name += "_" + sanitize(key) + "-" + sanitize(value);
  return name + "_" + std::to_string(seed);
}

// --- sweeps ----------------------------------------------------------------------

SweepSpec load_sweep(const std::filesystem::path& path) {
  const auto tree = read_json_file(path);
  if (!tree.is_object()) throw Error(ErrorCode::ParseError, path.string() + ": expected an object");
  SweepSpec spec;
  spec.base_dir = path.parent_path();
  for (const auto& item : tree.items()) {
    if (item.key() != "base" && item.key() != "axes" && item.key() != "parallelism") {
      throw Error(ErrorCode::UnknownKey, "unknown key '" + item.key() + "' in sweep " + path.string());
    }
  }
  if (!tree.contains("base") || !tree.contains("axes")) {
    throw Error(ErrorCode::InvariantViolation, path.string() + ": sweep needs 'base' and 'axes'");
  }
  if (tree["base"].is_string()) {
    const auto base_path = spec.base_dir / tree["base"].get<std::string>();
    spec.base = read_json_file(base_path);
    spec.base_dir = base_path.parent_path();
  } else {
    spec.base = tree["base"];
  }
  if (!tree["axes"].is_object()) throw Error(ErrorCode::ParseError, "axes: expected an object");
  for (const auto& item : tree["axes"].items()) {
    if (!item.value().is_array() || item.value().empty()) {
      throw Error(ErrorCode::ParseError, "axes." + item.key() + ": expected a non-empty array");
    }
    SweepAxis axis{item.key(), {}};
    for (const auto& v : item.value()) axis.values.push_back(v);
    spec.axes.push_back(std::move(axis));
  }
  if (tree.contains("parallelism")) {
    if (!tree["parallelism"].is_number_unsigned()) {
      throw Error(ErrorCode::ParseError, "parallelism: expected a non-negative integer");
    }
    spec.parallelism = tree["parallelism"].get<int>();
  }
  return spec;
}

std::vector<SweepPoint> expand_sweep(const SweepSpec& spec) {
  const auto master = parse_config(spec.base, spec.base_dir).seed;
  std::size_t total = 1;
  for (const auto& axis : spec.axes) total *= axis.values.size();

  std::vector<SweepPoint> points;
  points.reserve(total);
  for (std::size_t index = 0; index < total; ++index) {
    SweepPoint point;
    point.index = index;
    // First axis outermost: decompose the index with the last axis varying fastest.
    std::size_t rest = index;
    std::vector<std::size_t> digits(spec.axes.size());
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      digits[a] = rest % spec.axes[a].values.size();
      rest /= spec.axes[a].values.size();
    }
    auto tree = spec.base;
    std::vector<std::pair<std::string, std::string>> extra;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) {
      const auto& value = spec.axes[a].values[digits[a]];
      set_path(tree, spec.axes[a].key, value);
      point.assignment.emplace_back(spec.axes[a].key, value);
      if (!is_policy_key(spec.axes[a].key)) extra.emplace_back(leaf(spec.axes[a].key), value_label(value));
    }
    try {
      point.config = parse_config(tree, spec.base_dir);
    } catch (const Error& e) {
      throw Error(e.code(), "sweep point " + std::to_string(index) + ": " + e.what());
    }
    point.seed = derive_seed(master, index);
    point.basename = report_basename(point.config, extra, point.seed);
    points.push_back(std::move(point));
  }
  return points;
}

SweepOutcome run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  auto points = expand_sweep(spec);
  const auto master = parse_config(spec.base, spec.base_dir).seed;

  // One plan per distinct workload so every point replays identical arrivals.
  std::map<std::string, std::shared_ptr<const InvocationPlan>> plans;
  std::vector<std::shared_ptr<const InvocationPlan>> point_plans(points.size());
  std::vector<std::string> plan_errors(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto key = to_json(points[i].config)["workload"].dump();
    auto it = plans.find(key);
    if (it == plans.end()) {
      std::shared_ptr<const InvocationPlan> plan;
      try {
        plan = std::make_shared<const InvocationPlan>(build_plan(points[i].config, master));
      } catch (const std::exception& e) {
        plan_errors[i] = e.what();
      }
      it = plans.emplace(key, plan).first;
    }
    point_plans[i] = it->second;
    if (!it->second && plan_errors[i].empty()) plan_errors[i] = "workload could not be built";
  }

  SweepOutcome outcome;
  outcome.points.resize(points.size());
  int workers = options.parallelism > 0 ? options.parallelism : spec.parallelism;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(std::max<std::size_t>(points.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      PointOutcome out;
      out.point = points[i];
      if (!point_plans[i]) {
        out.error = plan_errors[i];
      } else {
        try {
          out.report = run_plan(points[i].config, *point_plans[i], points[i].seed);
          if (!options.out_dir.empty()) export_report(*out.report, options.out_dir, points[i].basename);
        } catch (const std::exception& e) {
          out.report.reset();
          out.error = e.what();
        }
      }
      std::lock_guard lock(done_mutex);
      outcome.points[i] = std::move(out);
      if (options.on_point_done) options.on_point_done(outcome.points[i]);
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < workers; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::vector<ExperimentReport> ok;
  for (const auto& p : outcome.points) {
    if (p.report) {
      ok.push_back(*p.report);
    } else {
      ++outcome.failed;
    }
  }
  if (!options.out_dir.empty()) {
    write_summary_csv(ok, options.out_dir / "summary.csv");
    if (outcome.failed > 0) {
      std::ofstream out(options.out_dir / "failures.csv");
      out << "index,basename,error\n";
      for (const auto& p : outcome.points) {
        if (p.report) continue;
        std::string msg = p.error;
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::replace(msg.begin(), msg.end(), ',', ';');
        out << p.point.index << ',' << p.point.basename << ',' << msg << '\n';
      }
    }
  }
  return outcome;
}

}  // namespace faassim
