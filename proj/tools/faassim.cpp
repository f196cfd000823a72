// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the simulator only through the C API.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faassim/faassim.h"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

int fail(const char* what, faassim_status status) {
  std::fprintf(stderr, "faassim: %s failed (%s): %s\n", what, faassim_status_name(status), faassim_last_error());
  return status == FAASSIM_OK ? 1 : static_cast<int>(status) + 1;
}

std::string take(char* s) {
  std::string out = s != nullptr ? s : "";
  faassim_string_free(s);
  return out;
}

/// --out, then the config's output_dir, then $FAAS_SIM_OUT, then ./out.
std::string output_dir(const Common& c, const std::string& from_config) {
  if (!c.out.empty()) return c.out;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("FAAS_SIM_OUT"); env != nullptr && *env != '\0') return env;
  return "out";
}

faassim_status load_config(const Common& c, faassim_config** cfg) {
  auto st = faassim_config_load(c.config.c_str(), cfg);
  if (st != FAASSIM_OK) return st;
  for (const auto& o : c.overrides) {
    if ((st = faassim_config_set(*cfg, o.c_str())) != FAASSIM_OK) return st;
  }
  if (c.seed) st = faassim_config_set(*cfg, ("seed=" + std::to_string(*c.seed)).c_str());
  return st;
}

void print_metrics(const faassim_report* report, const std::string& name) {
  std::printf("%s", name.c_str());
  for (const char* metric : {"slowdown", "normalized_memory", "creation_rate", "cpu_overhead", "worker_share",
                             "cold_start_fraction"}) {
    double v = 0.0;
    if (faassim_report_metric(report, metric, &v) == FAASSIM_OK) {
      std::printf(" %s=%.6g", metric, v);
    } else {
      std::printf(" %s=undefined", metric);
    }
  }
  std::printf("\n");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run_single(const Common& c, bool event_log, bool scale) {
  faassim_config* cfg = nullptr;
  if (auto st = load_config(c, &cfg); st != FAASSIM_OK) {
    faassim_config_free(cfg);
    return fail("loading config", st);
  }
  char* cfg_out = nullptr;
  faassim_config_output_dir(cfg, &cfg_out);
  const std::string dir = output_dir(c, take(cfg_out));
  std::filesystem::create_directories(dir);

  std::string log_path;
  if (event_log) log_path = (std::filesystem::path(dir) / "events.log").string();

  const auto start = std::chrono::steady_clock::now();
  faassim_report* report = nullptr;
  const auto st = scale ? faassim_scale(cfg, &report) : faassim_run(cfg, event_log ? log_path.c_str() : nullptr, &report);
  faassim_config_free(cfg);
  if (st != FAASSIM_OK) return fail(scale ? "scale run" : "run", st);

  char* base = nullptr;
  faassim_report_basename(report, &base);
  const std::string name = take(base);
  if (auto w = faassim_report_write(report, dir.c_str(), name.c_str()); w != FAASSIM_OK) {
    faassim_report_free(report);
    return fail("writing report", w);
  }
  if (event_log) {
    const auto target = std::filesystem::path(dir) / (name + "_events.log");
    std::filesystem::rename(log_path, target);
    std::fprintf(stderr, "event log: %s\n", target.c_str());
  }
  double events = 0.0;
  faassim_report_metric(report, "events_processed", &events);
  std::fprintf(stderr, "%s: %.0f events in %.2f s wall clock\n", name.c_str(), events, seconds_since(start));
  print_metrics(report, name);
  faassim_report_free(report);
  return 0;
}

int run_sweep(const Common& c, int parallel) {
  faassim_sweep* sweep = nullptr;
  auto st = faassim_sweep_load(c.config.c_str(), &sweep);
  for (std::size_t i = 0; st == FAASSIM_OK && i < c.overrides.size(); ++i) {
    st = faassim_sweep_set(sweep, c.overrides[i].c_str());
  }
  if (st == FAASSIM_OK && c.seed) st = faassim_sweep_set(sweep, ("seed=" + std::to_string(*c.seed)).c_str());
  if (st != FAASSIM_OK) {
    faassim_sweep_free(sweep);
    return fail("loading sweep", st);
  }
  std::size_t points = 0;
  faassim_sweep_point_count(sweep, &points);
  const std::string dir = output_dir(c, "");
  std::fprintf(stderr, "sweep: %zu points -> %s\n", points, dir.c_str());

  const auto start = std::chrono::steady_clock::now();
  faassim_sweep_result* result = nullptr;
  st = faassim_sweep_run(sweep, dir.c_str(), parallel, &result);
  faassim_sweep_free(sweep);
  if (st != FAASSIM_OK) return fail("sweep", st);

  for (std::size_t i = 0; i < faassim_sweep_result_points(result); ++i) {
    const char* name = nullptr;
    const char* error = nullptr;
    faassim_sweep_result_point(result, i, &name, &error);
    if (const auto* report = faassim_sweep_result_report(result, i)) {
      print_metrics(report, name);
    } else {
      std::fprintf(stderr, "point %zu (%s) failed: %s\n", i, name, error);
    }
  }
  const auto failed = faassim_sweep_result_failed(result);
  std::fprintf(stderr, "sweep finished in %.2f s, %zu failed\n", seconds_since(start), failed);
  faassim_sweep_result_free(result);
  return failed == 0 ? 0 : 1;
}

bool looks_like_sweep(const std::string& path) {
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text.find("\"axes\"") != std::string::npos;
}

int validate(const Common& c) {
  if (looks_like_sweep(c.config)) {
    faassim_sweep* sweep = nullptr;
    auto st = faassim_sweep_load(c.config.c_str(), &sweep);
    for (std::size_t i = 0; st == FAASSIM_OK && i < c.overrides.size(); ++i) {
      st = faassim_sweep_set(sweep, c.overrides[i].c_str());
    }
    std::size_t points = 0;
    if (st == FAASSIM_OK) faassim_sweep_point_count(sweep, &points);
    faassim_sweep_free(sweep);
    if (st != FAASSIM_OK) return fail("validating sweep", st);
    std::printf("sweep ok: %zu points\n", points);
    return 0;
  }
  faassim_config* cfg = nullptr;
  const auto st = load_config(c, &cfg);
  if (st != FAASSIM_OK) {
    faassim_config_free(cfg);
    return fail("validating config", st);
  }
  char* json = nullptr;
  faassim_config_to_json(cfg, &json);
  std::printf("%s\n", take(json).c_str());
  faassim_config_free(cfg);
  return 0;
}

int gen_trace(const Common& c) {
  const std::string dir = output_dir(c, "");
  const auto st = faassim_gen_trace(c.config.c_str(), c.seed.value_or(1), dir.c_str());
  if (st != FAASSIM_OK) return fail("gen-trace", st);
  std::fprintf(stderr, "trace written to %s\n", dir.c_str());
  return 0;
}

void add_common(CLI::App* cmd, Common& c, bool overrides = true) {
  cmd->add_option("--config", c.config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Master seed override");
  cmd->add_option("--out", c.out, "Output directory (default: config output_dir, $FAAS_SIM_OUT, ./out)");
  if (overrides) cmd->add_option("--set", c.overrides, "Dotted-path override, key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faassim: discrete-event serverless cluster simulator"};
  app.require_subcommand(1);
  Common common;
  bool event_log = false;
  int parallel = 0;

  auto* run = app.add_subcommand("run", "Run one experiment");
  add_common(run, common);
  run->add_flag("--event-log", event_log, "Write every processed event to <name>_events.log");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(sweep, common);
  sweep->add_option("--parallel", parallel, "Concurrent experiments (default: sweep file, then core count)");

  auto* scale = app.add_subcommand("scale", "Large-scale run with invariants checked throughout");
  add_common(scale, common);

  auto* gen = app.add_subcommand("gen-trace", "Write a synthetic trace from a spec file");
  add_common(gen, common, false);

  auto* check = app.add_subcommand("validate-config", "Validate a config or sweep file and print it resolved");
  add_common(check, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_single(common, event_log, false);
    if (scale->parsed()) return run_single(common, false, true);
    if (sweep->parsed()) return run_sweep(common, parallel);
    if (gen->parsed()) return gen_trace(common);
    if (check->parsed()) return validate(common);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "faassim: %s\n", e.what());
    return 1;
  }
  return 0;
}
