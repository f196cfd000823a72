// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/faassim.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "faassim/config.hpp"
#include "faassim/error.hpp"
#include "faassim/harness.hpp"

struct faassim_config {
  nlohmann::ordered_json tree;
  std::filesystem::path base_dir;
  faassim::ExperimentConfig config;
};

struct faassim_report {
  faassim::ExperimentReport report;
  std::string basename;
};

struct faassim_sweep {
  faassim::SweepSpec spec;
};

struct faassim_sweep_result {
  faassim::SweepOutcome outcome;
  std::vector<faassim_report> reports;  // parallel to outcome.points; empty basename marks failure
};

namespace {

thread_local std::string last_error;

static_assert(static_cast<int>(faassim::ErrorCode::ParseError) + 1 == FAASSIM_E_PARSE);
static_assert(static_cast<int>(faassim::ErrorCode::UnknownKey) + 1 == FAASSIM_E_UNKNOWN_KEY);
static_assert(static_cast<int>(faassim::ErrorCode::InvalidArgument) + 1 == FAASSIM_E_INVALID_ARGUMENT);
static_assert(FAASSIM_E_INVALID_ARGUMENT + 1 == FAASSIM_E_UNDEFINED);

faassim_status status_of(faassim::ErrorCode code) {
  return static_cast<faassim_status>(static_cast<int>(code) + 1);
}

template <typename F>
faassim_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return FAASSIM_OK;
  } catch (const faassim::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return FAASSIM_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FAASSIM_E_INTERNAL;
  }
}

faassim_status null_argument(const char* what) {
  last_error = std::string("InvalidArgument: ") + what + " is NULL";
  return FAASSIM_E_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* faassim_version(void) { return "0.1.0"; }

const char* faassim_status_name(faassim_status status) {
  switch (status) {
    case FAASSIM_OK:
      return "Ok";
    case FAASSIM_E_UNDEFINED:
      return "Undefined";
    case FAASSIM_E_INTERNAL:
      return "Internal";
    default:
      if (status > FAASSIM_OK && status < FAASSIM_E_UNDEFINED) {
        return faassim::to_string(static_cast<faassim::ErrorCode>(static_cast<int>(status) - 1));
      }
      return "Unknown";
  }
}

const char* faassim_last_error(void) { return last_error.c_str(); }

void faassim_string_free(char* s) { delete[] s; }

faassim_status faassim_config_load(const char* path, faassim_config** out) {
  if (path == nullptr || out == nullptr) return null_argument("path/out");
  *out = nullptr;
  return guarded([&] {
    auto cfg = std::make_unique<faassim_config>();
    cfg->tree = faassim::read_json_file(path);
    cfg->base_dir = std::filesystem::path(path).parent_path();
    cfg->config = faassim::parse_config(cfg->tree, cfg->base_dir);
    *out = cfg.release();
  });
}

faassim_status faassim_config_parse(const char* json, const char* base_dir, faassim_config** out) {
  if (json == nullptr || out == nullptr) return null_argument("json/out");
  *out = nullptr;
  return guarded([&] {
    auto cfg = std::make_unique<faassim_config>();
    cfg->tree = nlohmann::ordered_json::parse(json, nullptr, false);
    if (cfg->tree.is_discarded()) throw faassim::Error(faassim::ErrorCode::ParseError, "config is not valid JSON");
    if (base_dir != nullptr) cfg->base_dir = base_dir;
    cfg->config = faassim::parse_config(cfg->tree, cfg->base_dir);
    *out = cfg.release();
  });
}

faassim_status faassim_config_set(faassim_config* config, const char* assignment) {
  if (config == nullptr || assignment == nullptr) return null_argument("config/assignment");
  return guarded([&] {
    auto tree = config->tree;
    faassim::apply_override(tree, assignment);
    config->config = faassim::parse_config(tree, config->base_dir);
    config->tree = std::move(tree);
  });
}

faassim_status faassim_config_seed(const faassim_config* config, uint64_t* out) {
  if (config == nullptr || out == nullptr) return null_argument("config/out");
  *out = config->config.seed;
  return FAASSIM_OK;
}

faassim_status faassim_config_output_dir(const faassim_config* config, char** out) {
  if (config == nullptr || out == nullptr) return null_argument("config/out");
  return guarded([&] {
    const auto& dir = config->config.output_dir;
    *out = copy_string(dir.empty() ? std::string() : config->config.resolve(dir).string());
  });
}

faassim_status faassim_config_to_json(const faassim_config* config, char** out) {
  if (config == nullptr || out == nullptr) return null_argument("config/out");
  return guarded([&] { *out = copy_string(faassim::to_json(config->config).dump(2)); });
}

void faassim_config_free(faassim_config* config) { delete config; }

faassim_status faassim_run(const faassim_config* config, const char* event_log_path, faassim_report** out) {
  if (config == nullptr || out == nullptr) return null_argument("config/out");
  *out = nullptr;
  return guarded([&] {
    faassim::RunOptions options;
    std::ofstream log;
    if (event_log_path != nullptr) {
      log.open(event_log_path, std::ios::binary | std::ios::trunc);
      if (!log) throw faassim::Error(faassim::ErrorCode::Io, std::string("cannot write ") + event_log_path);
      options.event_log = &log;
    }
    auto r = std::make_unique<faassim_report>();
    r->report = faassim::run_experiment(config->config, options);
    r->basename = faassim::report_basename(config->config, {}, config->config.seed);
    *out = r.release();
  });
}

faassim_status faassim_scale(const faassim_config* config, faassim_report** out) {
  if (config == nullptr || out == nullptr) return null_argument("config/out");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<faassim_report>();
    r->report = faassim::scale_mode(config->config);
    r->basename = faassim::report_basename(config->config, {}, config->config.seed);
    *out = r.release();
  });
}

faassim_status faassim_report_metric(const faassim_report* report, const char* name, double* out) {
  if (report == nullptr || name == nullptr || out == nullptr) return null_argument("report/name/out");
  const auto& r = report->report;
  const std::string key(name);
  std::optional<double> v;
  if (key == "slowdown") {
    v = r.slowdown_geomean_p99;
  } else if (key == "normalized_memory") {
    v = r.normalized_memory;
  } else if (key == "creation_rate") {
    v = r.creation_rate_per_s;
  } else if (key == "teardown_rate") {
    v = r.teardown_rate_per_s;
  } else if (key == "cpu_overhead") {
    if (r.cpu_overhead) v = r.cpu_overhead->total;
  } else if (key == "worker_share") {
    if (r.cpu_overhead) v = r.cpu_overhead->worker_share;
  } else if (key == "cold_start_fraction") {
    v = r.cold_start_fraction;
  } else if (key == "invocations") {
    v = static_cast<double>(r.invocations);
  } else if (key == "measured_invocations") {
    v = static_cast<double>(r.measured_invocations);
  } else if (key == "events_processed") {
    v = static_cast<double>(r.events_processed);
  } else if (key == "peak_node_utilization") {
    double peak = 0.0;
    for (double u : r.peak_node_utilization) peak = std::max(peak, u);
    v = peak;
  } else {
    last_error = "InvalidArgument: unknown metric '" + key + "'";
    return FAASSIM_E_INVALID_ARGUMENT;
  }
  if (!v) {
    last_error = "Undefined: metric '" + key + "' has no value for this run";
    return FAASSIM_E_UNDEFINED;
  }
  *out = *v;
  return FAASSIM_OK;
}

faassim_status faassim_report_json(const faassim_report* report, char** out) {
  if (report == nullptr || out == nullptr) return null_argument("report/out");
  return guarded([&] { *out = copy_string(report->report.to_json().dump(2)); });
}

faassim_status faassim_report_basename(const faassim_report* report, char** out) {
  if (report == nullptr || out == nullptr) return null_argument("report/out");
  return guarded([&] { *out = copy_string(report->basename); });
}

faassim_status faassim_report_write(const faassim_report* report, const char* dir, const char* basename) {
  if (report == nullptr || dir == nullptr) return null_argument("report/dir");
  return guarded([&] {
    faassim::export_report(report->report, dir, basename != nullptr ? std::string(basename) : report->basename);
  });
}

void faassim_report_free(faassim_report* report) { delete report; }

faassim_status faassim_sweep_load(const char* path, faassim_sweep** out) {
  if (path == nullptr || out == nullptr) return null_argument("path/out");
  *out = nullptr;
  return guarded([&] {
    auto s = std::make_unique<faassim_sweep>();
    s->spec = faassim::load_sweep(path);
    faassim::expand_sweep(s->spec);  // validates every point up front
    *out = s.release();
  });
}

faassim_status faassim_sweep_set(faassim_sweep* sweep, const char* assignment) {
  if (sweep == nullptr || assignment == nullptr) return null_argument("sweep/assignment");
  return guarded([&] {
    auto spec = sweep->spec;
    faassim::apply_override(spec.base, assignment);
    faassim::expand_sweep(spec);
    sweep->spec = std::move(spec);
  });
}

faassim_status faassim_sweep_point_count(const faassim_sweep* sweep, size_t* out) {
  if (sweep == nullptr || out == nullptr) return null_argument("sweep/out");
  std::size_t n = 1;
  for (const auto& axis : sweep->spec.axes) n *= axis.values.size();
  *out = n;
  return FAASSIM_OK;
}

faassim_status faassim_sweep_run(const faassim_sweep* sweep, const char* out_dir, int parallelism,
                                 faassim_sweep_result** out) {
  if (sweep == nullptr || out == nullptr) return null_argument("sweep/out");
  *out = nullptr;
  return guarded([&] {
    faassim::SweepOptions options;
    options.parallelism = parallelism;
    if (out_dir != nullptr) options.out_dir = out_dir;
    auto result = std::make_unique<faassim_sweep_result>();
    result->outcome = faassim::run_sweep(sweep->spec, options);
    for (auto& p : result->outcome.points) {
      faassim_report r;
      if (p.report) {
        r.report = *p.report;
        r.basename = p.point.basename;
      }
      result->reports.push_back(std::move(r));
    }
    *out = result.release();
  });
}

void faassim_sweep_free(faassim_sweep* sweep) { delete sweep; }

size_t faassim_sweep_result_points(const faassim_sweep_result* result) {
  return result == nullptr ? 0 : result->outcome.points.size();
}

size_t faassim_sweep_result_failed(const faassim_sweep_result* result) {
  return result == nullptr ? 0 : result->outcome.failed;
}

faassim_status faassim_sweep_result_point(const faassim_sweep_result* result, size_t index, const char** basename,
                                          const char** error) {
  if (result == nullptr) return null_argument("result");
  if (index >= result->outcome.points.size()) {
    last_error = "InvalidArgument: point index out of range";
    return FAASSIM_E_INVALID_ARGUMENT;
  }
  const auto& p = result->outcome.points[index];
  if (basename != nullptr) *basename = p.point.basename.c_str();
  if (error != nullptr) *error = p.error.c_str();
  return FAASSIM_OK;
}

const faassim_report* faassim_sweep_result_report(const faassim_sweep_result* result, size_t index) {
  if (result == nullptr || index >= result->reports.size() || !result->outcome.points[index].report) return nullptr;
  return &result->reports[index];
}

void faassim_sweep_result_free(faassim_sweep_result* result) { delete result; }

faassim_status faassim_gen_trace(const char* spec_path, uint64_t seed, const char* out_dir) {
  if (spec_path == nullptr || out_dir == nullptr) return null_argument("spec_path/out_dir");
  return guarded([&] {
    const auto tree = faassim::read_json_file(spec_path);
    std::vector<faassim::SyntheticTraceSpec> classes;
    if (tree.is_array()) {
      for (std::size_t i = 0; i < tree.size(); ++i) {
        classes.push_back(faassim::parse_synthetic_spec(tree[i], "synthetic[" + std::to_string(i) + "]"));
      }
    } else {
      classes.push_back(faassim::parse_synthetic_spec(tree, "synthetic"));
    }
    const auto profiles = classes.size() == 1 ? faassim::gen_synthetic_trace(classes.front(), seed)
                                              : faassim::gen_synthetic_mixture(classes, seed);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    faassim::write_trace(profiles, {dir / "invocations.csv", dir / "durations.csv", dir / "memory.csv"});
  });
}

}  // extern "C"
