// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "faassim/error.hpp"

namespace faassim {
namespace {

using nlohmann::ordered_json;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

[[noreturn]] void type_error(const std::string& path, const char* expected) {
  throw Error(ErrorCode::ParseError, path + ": expected " + expected);
}

void require_object(const ordered_json& node, const std::string& path) {
  if (!node.is_object()) type_error(path.empty() ? "<root>" : path, "an object");
}

void check_keys(const ordered_json& node, const std::string& path, std::initializer_list<std::string_view> allowed) {
  require_object(node, path);
  for (const auto& item : node.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || item.key() == a;
    if (!ok) throw Error(ErrorCode::UnknownKey, "unknown key '" + join(path, item.key()) + "'");
  }
}

std::int64_t get_int(const ordered_json& node, const std::string& path) {
  if (node.is_number_integer()) return node.get<std::int64_t>();
  if (node.is_number_float()) {
    const double v = node.get<double>();
    if (v == static_cast<double>(static_cast<std::int64_t>(v))) return static_cast<std::int64_t>(v);
  }
  type_error(path, "an integer");
}

double get_double(const ordered_json& node, const std::string& path) {
  if (!node.is_number()) type_error(path, "a number");
  return node.get<double>();
}

std::string get_string(const ordered_json& node, const std::string& path) {
  if (!node.is_string()) type_error(path, "a string");
  return node.get<std::string>();
}

bool get_bool(const ordered_json& node, const std::string& path) {
  if (!node.is_boolean()) type_error(path, "a boolean");
  return node.get<bool>();
}

/// Reads `key` from `node` into `out` when present.
template <typename F>
void optional_field(const ordered_json& node, const std::string& path, std::string_view key, F&& read) {
  const auto it = node.find(std::string(key));
  if (it != node.end()) read(*it, join(path, key));
}

[[noreturn]] void invalid(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::InvariantViolation, path + ": " + why);
}

int to_int(std::int64_t v, const std::string& path) {
  if (v < INT32_MIN || v > INT32_MAX) invalid(path, "out of range");
  return static_cast<int>(v);
}

CostModel parse_cost_model(const ordered_json& node, const std::string& path) {
  if (node.is_string()) {
    try {
      return CostModel::from_profile(node.get<std::string>());
    } catch (const Error& e) {
      invalid(path, e.what());
    }
  }
  check_keys(node, path,
             {"profile", "creation_delay_ms", "warm_path_overhead_ms", "cpu_create_worker_ms",
              "cpu_teardown_worker_ms", "cpu_master_per_lifecycle_ms", "idle_background_cpu_ms_per_s",
              "worker_background_cpu_ms_per_s", "master_background_cpu_ms_per_s"});
  CostModel c;
  if (node.contains("profile")) {
    const auto name = get_string(node["profile"], join(path, "profile"));
    try {
      c = CostModel::from_profile(name);
    } catch (const Error& e) {
      invalid(join(path, "profile"), e.what());
    }
  } else {
    c.profile.clear();
  }
  optional_field(node, path, "creation_delay_ms",
                 [&](auto& v, auto p) { c.creation_delay_ms = parse_distribution(v, p); });
  optional_field(node, path, "warm_path_overhead_ms",
                 [&](auto& v, auto p) { c.warm_path_overhead_ms = parse_distribution(v, p); });
  const std::pair<std::string_view, double*> scalars[] = {
      {"cpu_create_worker_ms", &c.cpu_create_worker_ms},
      {"cpu_teardown_worker_ms", &c.cpu_teardown_worker_ms},
      {"cpu_master_per_lifecycle_ms", &c.cpu_master_per_lifecycle_ms},
      {"idle_background_cpu_ms_per_s", &c.idle_background_cpu_ms_per_s},
      {"worker_background_cpu_ms_per_s", &c.worker_background_cpu_ms_per_s},
      {"master_background_cpu_ms_per_s", &c.master_background_cpu_ms_per_s},
  };
  for (const auto& [key, field] : scalars) {
    optional_field(node, path, key, [&](auto& v, auto p) { *field = get_double(v, p); });
  }
  return c;
}

PolicyConfig parse_policy(const ordered_json& node, const std::string& path) {
  check_keys(node, path,
             {"variant", "keepalive_ms", "window_ms", "target", "container_concurrency", "evaluation_period_ms",
              "sample_period_ms"});
  PolicyConfig p;
  if (!node.contains("variant")) invalid(join(path, "variant"), "required");
  const auto variant = get_string(node["variant"], join(path, "variant"));
  if (variant == "sync") {
    p.variant = PolicyVariant::SyncKeepalive;
    if (!node.contains("keepalive_ms")) invalid(join(path, "keepalive_ms"), "required for variant sync");
  } else if (variant == "async") {
    p.variant = PolicyVariant::AsyncWindow;
    if (!node.contains("window_ms")) invalid(join(path, "window_ms"), "required for variant async");
  } else {
    invalid(join(path, "variant"), "must be 'sync' or 'async'");
  }
  optional_field(node, path, "keepalive_ms", [&](auto& v, auto k) { p.keepalive_ms = get_int(v, k); });
  optional_field(node, path, "window_ms", [&](auto& v, auto k) { p.window_ms = get_int(v, k); });
  optional_field(node, path, "target", [&](auto& v, auto k) { p.utilization_target = get_double(v, k); });
  optional_field(node, path, "container_concurrency",
                 [&](auto& v, auto k) { p.container_concurrency = to_int(get_int(v, k), k); });
  optional_field(node, path, "evaluation_period_ms",
                 [&](auto& v, auto k) { p.evaluation_period_ms = get_int(v, k); });
  optional_field(node, path, "sample_period_ms", [&](auto& v, auto k) { p.sample_period_ms = get_int(v, k); });
  return p;
}

WorkloadConfig parse_workload(const ordered_json& node, const std::string& path) {
  check_keys(node, path, {"trace", "synthetic", "plan", "sample_k", "experiment_minutes", "warmup_minutes"});
  WorkloadConfig w;
  const int sources = static_cast<int>(node.contains("trace")) + static_cast<int>(node.contains("synthetic")) +
                      static_cast<int>(node.contains("plan"));
  if (sources != 1) invalid(path, "exactly one of trace, synthetic, plan is required");
  if (node.contains("trace")) {
    const auto tp = join(path, "trace");
    const auto& t = node["trace"];
    check_keys(t, tp, {"invocations", "durations", "memory"});
    for (auto key : {"invocations", "durations", "memory"}) {
      if (!t.contains(key)) invalid(join(tp, key), "required");
    }
    w.source = WorkloadConfig::Source::Trace;
    w.invocations_path = get_string(t["invocations"], join(tp, "invocations"));
    w.durations_path = get_string(t["durations"], join(tp, "durations"));
    w.memory_path = get_string(t["memory"], join(tp, "memory"));
  } else if (node.contains("synthetic")) {
    w.source = WorkloadConfig::Source::Synthetic;
    w.synthetic = parse_synthetic_spec(node["synthetic"], join(path, "synthetic"));
  } else {
    w.source = WorkloadConfig::Source::Plan;
    w.plan_path = get_string(node["plan"], join(path, "plan"));
  }
  optional_field(node, path, "sample_k", [&](auto& v, auto k) {
    const auto n = get_int(v, k);
    if (n < 0) invalid(k, "must be >= 0");
    w.sample_k = static_cast<std::size_t>(n);
  });
  optional_field(node, path, "experiment_minutes",
                 [&](auto& v, auto k) { w.experiment_minutes = to_int(get_int(v, k), k); });
  optional_field(node, path, "warmup_minutes", [&](auto& v, auto k) { w.warmup_minutes = to_int(get_int(v, k), k); });
  return w;
}

}  // namespace

// --- distributions / synthetic spec ----------------------------------------------

Distribution parse_distribution(const ordered_json& node, const std::string& path) {
  if (node.is_number()) return Distribution::fixed(node.get<double>());
  require_object(node, path);
  if (!node.contains("kind")) invalid(join(path, "kind"), "required");
  const auto kind = get_string(node["kind"], join(path, "kind"));
  auto num = [&](const char* key) {
    if (!node.contains(key)) invalid(join(path, key), "required");
    return get_double(node[key], join(path, key));
  };
  Distribution d;
  if (kind == "deterministic") {
    check_keys(node, path, {"kind", "value"});
    d = Distribution::fixed(num("value"));
  } else if (kind == "uniform") {
    check_keys(node, path, {"kind", "lo", "hi"});
    d = Distribution::uniform(num("lo"), num("hi"));
  } else if (kind == "lognormal") {
    check_keys(node, path, {"kind", "mu", "sigma", "lo", "hi"});
    d = Distribution::lognormal(num("mu"), num("sigma"), num("lo"), num("hi"));
  } else {
    invalid(join(path, "kind"), "must be deterministic, uniform or lognormal");
  }
  try {
    d.validate(path);
  } catch (const Error& e) {
    invalid(path, e.what());
  }
  return d;
}

ordered_json to_json(const Distribution& d) {
  switch (d.kind) {
    case Distribution::Kind::Deterministic:
      return {{"kind", "deterministic"}, {"value", d.value}};
    case Distribution::Kind::Uniform:
      return {{"kind", "uniform"}, {"lo", d.lo}, {"hi", d.hi}};
    case Distribution::Kind::LogNormal:
      return {{"kind", "lognormal"}, {"mu", d.mu}, {"sigma", d.sigma}, {"lo", d.lo}, {"hi", d.hi}};
  }
  return nullptr;
}

SyntheticTraceSpec parse_synthetic_spec(const ordered_json& node, const std::string& path) {
  check_keys(node, path,
             {"num_functions", "minutes", "rate_per_minute", "aggregate_rate_per_minute", "median_duration_ms",
              "memory_mb", "count_noise", "burst_sigma", "id_prefix"});
  SyntheticTraceSpec s;
  optional_field(node, path, "num_functions", [&](auto& v, auto k) { s.num_functions = to_int(get_int(v, k), k); });
  optional_field(node, path, "minutes", [&](auto& v, auto k) { s.minutes = to_int(get_int(v, k), k); });
  optional_field(node, path, "rate_per_minute",
                 [&](auto& v, auto k) { s.rate_per_minute = parse_distribution(v, k); });
  optional_field(node, path, "aggregate_rate_per_minute",
                 [&](auto& v, auto k) { s.aggregate_rate_per_minute = get_double(v, k); });
  optional_field(node, path, "median_duration_ms",
                 [&](auto& v, auto k) { s.median_duration_ms = parse_distribution(v, k); });
  optional_field(node, path, "memory_mb", [&](auto& v, auto k) { s.memory_mb = parse_distribution(v, k); });
  optional_field(node, path, "count_noise", [&](auto& v, auto k) {
    const auto mode = get_string(v, k);
    if (mode == "exact") {
      s.count_noise = SyntheticTraceSpec::CountNoise::Exact;
    } else if (mode == "poisson") {
      s.count_noise = SyntheticTraceSpec::CountNoise::Poisson;
    } else {
      invalid(k, "must be 'exact' or 'poisson'");
    }
  });
  optional_field(node, path, "burst_sigma", [&](auto& v, auto k) { s.burst_sigma = get_double(v, k); });
  optional_field(node, path, "id_prefix", [&](auto& v, auto k) { s.id_prefix = get_string(v, k); });
  try {
    s.validate();
  } catch (const Error& e) {
    invalid(path, e.what());
  }
  return s;
}

ordered_json to_json(const SyntheticTraceSpec& s) {
  ordered_json j;
  j["num_functions"] = s.num_functions;
  j["minutes"] = s.minutes;
  j["rate_per_minute"] = to_json(s.rate_per_minute);
  j["aggregate_rate_per_minute"] = s.aggregate_rate_per_minute;
  j["median_duration_ms"] = to_json(s.median_duration_ms);
  j["memory_mb"] = to_json(s.memory_mb);
  j["count_noise"] = s.count_noise == SyntheticTraceSpec::CountNoise::Exact ? "exact" : "poisson";
  j["burst_sigma"] = s.burst_sigma;
  j["id_prefix"] = s.id_prefix;
  return j;
}

// --- experiment config ----------------------------------------------------------------

bool WorkloadConfig::operator==(const WorkloadConfig& o) const {
  return source == o.source && invocations_path == o.invocations_path && durations_path == o.durations_path &&
         memory_path == o.memory_path && plan_path == o.plan_path && to_json(synthetic) == to_json(o.synthetic) &&
         sample_k == o.sample_k && experiment_minutes == o.experiment_minutes && warmup_minutes == o.warmup_minutes;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return seed == o.seed && output_dir == o.output_dir && cluster == o.cluster && cost_model == o.cost_model &&
         policy == o.policy && workload == o.workload && check_invariants == o.check_invariants &&
         metrics_period_ms == o.metrics_period_ms;
}

void ExperimentConfig::validate() const {
  try {
    cluster.validate();
  } catch (const Error& e) {
    invalid("cluster", e.what());
  }
  try {
    cost_model.validate();
  } catch (const Error& e) {
    invalid("cost_model", e.what());
  }
  try {
    policy.validate();
  } catch (const Error& e) {
    invalid("policy", e.what());
  }
  if (workload.experiment_minutes <= 0) invalid("workload.experiment_minutes", "must be > 0");
  if (workload.warmup_minutes < 0) invalid("workload.warmup_minutes", "must be >= 0");
  if (workload.warmup_minutes >= workload.experiment_minutes) {
    invalid("workload.warmup_minutes", "must be < experiment_minutes");
  }
  if (workload.source == WorkloadConfig::Source::Synthetic &&
      workload.synthetic.minutes < workload.experiment_minutes) {
    invalid("workload.synthetic.minutes", "must cover experiment_minutes");
  }
  if (metrics_period_ms <= 0) invalid("simulation.metrics_period_ms", "must be > 0");
}

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

ExperimentConfig parse_config(const ordered_json& tree, const std::filesystem::path& base_dir) {
  check_keys(tree, "", {"seed", "output_dir", "cluster", "cost_model", "policy", "workload", "simulation"});
  ExperimentConfig c;
  c.base_dir = base_dir;
  optional_field(tree, "", "seed", [&](auto& v, auto k) {
    if (!v.is_number_unsigned()) type_error(k, "a non-negative integer");
    c.seed = v.template get<std::uint64_t>();
  });
  optional_field(tree, "", "output_dir", [&](auto& v, auto k) { c.output_dir = get_string(v, k); });
  optional_field(tree, "", "cluster", [&](auto& v, auto k) {
    check_keys(v, k, {"nodes", "cores_per_node", "memory_mb_per_node"});
    optional_field(v, k, "nodes", [&](auto& x, auto p) { c.cluster.nodes = to_int(get_int(x, p), p); });
    optional_field(v, k, "cores_per_node",
                   [&](auto& x, auto p) { c.cluster.cores_per_node = to_int(get_int(x, p), p); });
    optional_field(v, k, "memory_mb_per_node",
                   [&](auto& x, auto p) { c.cluster.memory_mb_per_node = get_int(x, p); });
  });
  optional_field(tree, "", "cost_model", [&](auto& v, auto k) { c.cost_model = parse_cost_model(v, k); });
  if (!tree.contains("policy")) invalid("policy", "required");
  c.policy = parse_policy(tree["policy"], "policy");
  if (!tree.contains("workload")) invalid("workload", "required");
  c.workload = parse_workload(tree["workload"], "workload");
  optional_field(tree, "", "simulation", [&](auto& v, auto k) {
    check_keys(v, k, {"check_invariants", "metrics_period_ms"});
    optional_field(v, k, "check_invariants", [&](auto& x, auto p) { c.check_invariants = get_bool(x, p); });
    optional_field(v, k, "metrics_period_ms", [&](auto& x, auto p) { c.metrics_period_ms = get_int(x, p); });
  });
  c.validate();
  return c;
}

ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["cluster"] = {{"nodes", c.cluster.nodes},
                  {"cores_per_node", c.cluster.cores_per_node},
                  {"memory_mb_per_node", c.cluster.memory_mb_per_node}};
  ordered_json cost;
  if (!c.cost_model.profile.empty()) cost["profile"] = c.cost_model.profile;
  cost["creation_delay_ms"] = to_json(c.cost_model.creation_delay_ms);
  cost["warm_path_overhead_ms"] = to_json(c.cost_model.warm_path_overhead_ms);
  cost["cpu_create_worker_ms"] = c.cost_model.cpu_create_worker_ms;
  cost["cpu_teardown_worker_ms"] = c.cost_model.cpu_teardown_worker_ms;
  cost["cpu_master_per_lifecycle_ms"] = c.cost_model.cpu_master_per_lifecycle_ms;
  cost["idle_background_cpu_ms_per_s"] = c.cost_model.idle_background_cpu_ms_per_s;
  cost["worker_background_cpu_ms_per_s"] = c.cost_model.worker_background_cpu_ms_per_s;
  cost["master_background_cpu_ms_per_s"] = c.cost_model.master_background_cpu_ms_per_s;
  j["cost_model"] = cost;
  j["policy"] = {{"variant", to_string(c.policy.variant)},
                 {"keepalive_ms", c.policy.keepalive_ms},
                 {"window_ms", c.policy.window_ms},
                 {"target", c.policy.utilization_target},
                 {"container_concurrency", c.policy.container_concurrency},
                 {"evaluation_period_ms", c.policy.evaluation_period_ms},
                 {"sample_period_ms", c.policy.sample_period_ms}};
  ordered_json w;
  switch (c.workload.source) {
    case WorkloadConfig::Source::Trace:
      w["trace"] = {{"invocations", c.workload.invocations_path},
                    {"durations", c.workload.durations_path},
                    {"memory", c.workload.memory_path}};
      break;
    case WorkloadConfig::Source::Synthetic:
      w["synthetic"] = to_json(c.workload.synthetic);
      break;
    case WorkloadConfig::Source::Plan:
      w["plan"] = c.workload.plan_path;
      break;
  }
  w["sample_k"] = c.workload.sample_k;
  w["experiment_minutes"] = c.workload.experiment_minutes;
  w["warmup_minutes"] = c.workload.warmup_minutes;
  j["workload"] = w;
  j["simulation"] = {{"check_invariants", c.check_invariants}, {"metrics_period_ms", c.metrics_period_ms}};
  return j;
}

void set_path(ordered_json& tree, std::string_view dotted, ordered_json value) {
  if (dotted.empty()) throw Error(ErrorCode::InvalidArgument, "empty override key");
  ordered_json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? dotted.npos : dot - start));
    if (key.empty()) throw Error(ErrorCode::InvalidArgument, "malformed override key '" + std::string(dotted) + "'");
    if (node->is_string()) {
      // A profile name given as a bare string grows into {profile: name}.
      *node = ordered_json{{"profile", node->get<std::string>()}};
    }
    if (node->is_null()) *node = ordered_json::object();
    if (!node->is_object()) {
      throw Error(ErrorCode::InvalidArgument, "override '" + std::string(dotted) + "' descends into a non-object");
    }
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void apply_override(ordered_json& tree, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string raw(assignment.substr(eq + 1));
  ordered_json value = ordered_json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  set_path(tree, assignment.substr(0, eq), std::move(value));
}

}  // namespace faassim
