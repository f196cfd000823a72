// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <unordered_map>

#include "csv.hpp"
#include "faassim/error.hpp"

namespace faassim {

namespace {

constexpr std::array<const char*, 7> kPercentileColumns = {
    "percentile_Average_0",  "percentile_Average_1",  "percentile_Average_25", "percentile_Average_50",
    "percentile_Average_75", "percentile_Average_99", "percentile_Average_100",
};

// Shape of the synthetic duration distribution relative to its median.
constexpr std::array<double, 7> kSyntheticShape = {0.35, 0.5, 0.8, 1.0, 1.3, 2.5, 3.5};

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::int64_t poisson(RngStream& rng, double lambda) {
  // Inversion in chunks of at most 30 keeps exp(-lambda) well away from underflow.
  std::int64_t total = 0;
  while (lambda > 0.0) {
    const double chunk = std::min(lambda, 30.0);
    lambda -= chunk;
    const double limit = std::exp(-chunk);
    double p = rng.next_unit();
    std::int64_t k = 0;
    while (p > limit) {
      p *= rng.next_unit();
      ++k;
    }
    total += k;
  }
  return total;
}

void fnv(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

// --- DurationStats ----------------------------------------------------------

double DurationStats::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  for (std::size_t i = 1; i < kDurationQuantiles.size(); ++i) {
    if (u <= kDurationQuantiles[i]) {
      const double q0 = kDurationQuantiles[i - 1];
      const double q1 = kDurationQuantiles[i];
      const double t = (u - q0) / (q1 - q0);
      return percentile_ms[i - 1] + t * (percentile_ms[i] - percentile_ms[i - 1]);
    }
  }
  return percentile_ms.back();
}

double DurationStats::interpolated_mean() const {
  double mean = 0.0;
  for (std::size_t i = 1; i < kDurationQuantiles.size(); ++i) {
    mean += (kDurationQuantiles[i] - kDurationQuantiles[i - 1]) * 0.5 * (percentile_ms[i - 1] + percentile_ms[i]);
  }
  return mean;
}

std::int64_t FunctionProfile::total_invocations() const {
  return std::accumulate(per_minute_counts.begin(), per_minute_counts.end(), std::int64_t{0});
}

void validate_profile(const FunctionProfile& p) {
  const auto& pct = p.durations.percentile_ms;
  for (std::size_t i = 0; i < pct.size(); ++i) {
    if (!std::isfinite(pct[i]) || pct[i] < 0.0) {
      throw Error(ErrorCode::InvalidProfile, "function " + p.id + ": percentile values must be finite and >= 0");
    }
    if (i > 0 && pct[i] < pct[i - 1]) {
      throw Error(ErrorCode::NonMonotonePercentiles,
                  "function " + p.id + ": percentile_Average_" +
                      std::to_string(static_cast<int>(kDurationQuantiles[i] * 100)) + " < percentile_Average_" +
                      std::to_string(static_cast<int>(kDurationQuantiles[i - 1] * 100)));
    }
  }
  if (!(p.durations.average_ms >= pct.front() && p.durations.average_ms <= pct.back())) {
    throw Error(ErrorCode::InvalidProfile, "function " + p.id + ": Average outside [p0, p100]");
  }
  if (p.memory_mb <= 0) throw Error(ErrorCode::InvalidProfile, "function " + p.id + ": memory must be > 0");
  for (auto c : p.per_minute_counts) {
    if (c < 0) throw Error(ErrorCode::NegativeCount, "function " + p.id + ": negative per-minute count");
  }
}

// --- parse / write ------------------------------------------------------------

std::vector<FunctionProfile> parse_trace(const TraceFiles& files) {
  const auto inv = csv::read(files.invocations);
  const auto dur = csv::read(files.durations);
  const auto mem = csv::read(files.memory);

  // Minute columns are the all-digit headers and must form 1..N.
  std::vector<std::pair<std::int64_t, std::size_t>> minute_cols;
  for (std::size_t i = 0; i < inv.header.size(); ++i) {
    if (all_digits(inv.header[i])) minute_cols.emplace_back(std::stoll(inv.header[i]), i);
  }
  std::sort(minute_cols.begin(), minute_cols.end());
  if (minute_cols.empty()) {
    throw Error(ErrorCode::MissingColumn, inv.path.string() + ": no per-minute count columns");
  }
  for (std::size_t i = 0; i < minute_cols.size(); ++i) {
    if (minute_cols[i].first != static_cast<std::int64_t>(i) + 1) {
      throw Error(ErrorCode::MissingColumn, inv.path.string() + ": minute column " + std::to_string(i + 1) +
                                                " missing or duplicated");
    }
  }
  const auto inv_id = inv.require("HashFunction");

  const auto dur_id = dur.require("HashFunction");
  const auto dur_avg = dur.require("Average");
  std::array<std::size_t, 7> dur_pct{};
  for (std::size_t i = 0; i < kPercentileColumns.size(); ++i) dur_pct[i] = dur.require(kPercentileColumns[i]);

  const auto mem_id = mem.require("HashFunction");
  const auto mem_mb = mem.require("AverageAllocatedMb");

  auto field = [](const csv::Table& t, std::size_t row, const std::vector<std::string_view>& f, std::size_t col) {
    if (col >= f.size()) throw Error(ErrorCode::ParseError, t.where(row) + ": too few fields");
    return f[col];
  };
  auto number = [&](const csv::Table& t, std::size_t row, const std::vector<std::string_view>& f,
                    std::size_t col) {
    auto v = csv::parse_double(field(t, row, f, col));
    if (!v) throw Error(ErrorCode::ParseError, t.where(row) + ": column '" + t.header[col] + "' is not a number");
    return *v;
  };

  std::unordered_map<std::string, std::pair<DurationStats, std::size_t>> durations;
  for (std::size_t r = 0; r < dur.rows.size(); ++r) {
    const auto f = csv::split(dur.rows[r]);
    std::string id(field(dur, r, f, dur_id));
    DurationStats s;
    s.average_ms = number(dur, r, f, dur_avg);
    for (std::size_t i = 0; i < dur_pct.size(); ++i) s.percentile_ms[i] = number(dur, r, f, dur_pct[i]);
    if (!durations.emplace(id, std::make_pair(s, r)).second) {
      throw Error(ErrorCode::ParseError, dur.where(r) + ": duplicate HashFunction " + id);
    }
  }
  std::unordered_map<std::string, std::pair<std::int64_t, std::size_t>> memory;
  for (std::size_t r = 0; r < mem.rows.size(); ++r) {
    const auto f = csv::split(mem.rows[r]);
    std::string id(field(mem, r, f, mem_id));
    const auto mb = static_cast<std::int64_t>(std::llround(number(mem, r, f, mem_mb)));
    if (!memory.emplace(id, std::make_pair(mb, r)).second) {
      throw Error(ErrorCode::ParseError, mem.where(r) + ": duplicate HashFunction " + id);
    }
  }

  std::vector<FunctionProfile> out;
  out.reserve(inv.rows.size());
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 0; r < inv.rows.size(); ++r) {
    const auto f = csv::split(inv.rows[r]);
    FunctionProfile p;
    p.id = std::string(field(inv, r, f, inv_id));
    if (!seen.emplace(p.id, r).second) {
      throw Error(ErrorCode::ParseError, inv.where(r) + ": duplicate HashFunction " + p.id);
    }
    p.per_minute_counts.reserve(minute_cols.size());
    for (const auto& [minute, col] : minute_cols) {
      auto c = csv::parse_int(field(inv, r, f, col));
      if (!c) throw Error(ErrorCode::ParseError, inv.where(r) + ": minute " + std::to_string(minute) + " count");
      if (*c < 0) {
        throw Error(ErrorCode::NegativeCount, inv.where(r) + ": minute " + std::to_string(minute) + " count " +
                                                  std::to_string(*c));
      }
      p.per_minute_counts.push_back(*c);
    }
    auto d = durations.find(p.id);
    if (d == durations.end()) {
      throw Error(ErrorCode::UnknownFunctionId, inv.where(r) + ": " + p.id + " has no durations row");
    }
    auto m = memory.find(p.id);
    if (m == memory.end()) {
      throw Error(ErrorCode::UnknownFunctionId, inv.where(r) + ": " + p.id + " has no memory row");
    }
    p.durations = d->second.first;
    p.memory_mb = m->second.first;
    try {
      validate_profile(p);
    } catch (const Error& e) {
      const std::string where = e.code() == ErrorCode::NonMonotonePercentiles ? dur.where(d->second.second)
                                                                               : inv.where(r);
      throw Error(e.code(), where + ": " + e.what());
    }
    out.push_back(std::move(p));
  }
  for (const auto& [id, v] : durations) {
    if (!seen.contains(id)) {
      throw Error(ErrorCode::UnknownFunctionId, dur.where(v.second) + ": " + id + " not in invocations file");
    }
  }
  for (const auto& [id, v] : memory) {
    if (!seen.contains(id)) {
      throw Error(ErrorCode::UnknownFunctionId, mem.where(v.second) + ": " + id + " not in invocations file");
    }
  }
  return out;
}

void write_trace(std::span<const FunctionProfile> profiles, const TraceFiles& files) {
  auto open = [](const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    return out;
  };
  const std::size_t minutes = profiles.empty() ? 0 : profiles.front().per_minute_counts.size();

  auto inv = open(files.invocations);
  inv << "HashFunction";
  for (std::size_t m = 1; m <= minutes; ++m) inv << ',' << m;
  inv << '\n';
  for (const auto& p : profiles) {
    if (p.per_minute_counts.size() != minutes) {
      throw Error(ErrorCode::InvalidArgument, "function " + p.id + ": per-minute counts length differs");
    }
    inv << p.id;
    for (auto c : p.per_minute_counts) inv << ',' << c;
    inv << '\n';
  }

  auto dur = open(files.durations);
  dur << "HashFunction,Average";
  for (const auto* c : kPercentileColumns) dur << ',' << c;
  dur << '\n';
  for (const auto& p : profiles) {
    dur << p.id << ',' << csv::format_double(p.durations.average_ms);
    for (double v : p.durations.percentile_ms) dur << ',' << csv::format_double(v);
    dur << '\n';
  }

  auto mem = open(files.memory);
  mem << "HashFunction,AverageAllocatedMb\n";
  for (const auto& p : profiles) mem << p.id << ',' << p.memory_mb << '\n';
}

// --- sampling -----------------------------------------------------------------

std::vector<FunctionProfile> sample_functions(std::span<const FunctionProfile> profiles, std::size_t k,
                                              std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> buckets;
  std::size_t population = 0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto total = profiles[i].total_invocations();
    if (total <= 0) continue;
    // Integer digit count avoids floating log10 edge cases at exact powers of ten.
    int bucket = 0;
    for (auto t = total; t >= 10; t /= 10) ++bucket;
    buckets[bucket].push_back(i);
    ++population;
  }
  if (k > population) {
    throw Error(ErrorCode::InsufficientFunctions, "requested " + std::to_string(k) + " functions, only " +
                                                      std::to_string(population) + " have invocations");
  }

  // Largest-remainder apportionment; ties go to the lower bucket.
  struct Quota {
    int bucket;
    std::size_t take;
    std::size_t remainder_num;  // remainder numerator over `population`
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [bucket, members] : buckets) {
    const std::size_t num = k * members.size();
    quotas.push_back({bucket, num / population, num % population});
    assigned += num / population;
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return quotas[a].remainder_num > quotas[b].remainder_num; });
  for (std::size_t i = 0; assigned < k; ++i, ++assigned) ++quotas[order[i]].take;

  RngStream rng(seed, "function-sampling");
  std::vector<std::size_t> chosen;
  for (const auto& q : quotas) {
    auto members = buckets[q.bucket];
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < q.take; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(members.size()) - 1));
      std::swap(members[i], members[j]);
      chosen.push_back(members[i]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<FunctionProfile> out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(profiles[i]);
  return out;
}

// --- plan expansion -------------------------------------------------------------

std::uint64_t InvocationPlan::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : functions) {
    fnv(h, hash_label(f.id));
    fnv(h, static_cast<std::uint64_t>(f.memory_mb));
  }
  for (const auto& e : entries) {
    fnv(h, static_cast<std::uint64_t>(e.arrival_ms));
    fnv(h, e.function);
    fnv(h, e.seq);
    fnv(h, static_cast<std::uint64_t>(e.duration_ms));
  }
  fnv(h, static_cast<std::uint64_t>(total_duration_ms));
  fnv(h, static_cast<std::uint64_t>(warmup_cutoff_ms));
  return h;
}

namespace {

void sort_plan(InvocationPlan& plan) {
  std::vector<std::uint32_t> rank(plan.functions.size());
  std::vector<std::uint32_t> by_id(plan.functions.size());
  std::iota(by_id.begin(), by_id.end(), 0U);
  std::sort(by_id.begin(), by_id.end(),
            [&](auto a, auto b) { return plan.functions[a].id < plan.functions[b].id; });
  for (std::uint32_t r = 0; r < by_id.size(); ++r) rank[by_id[r]] = r;
  std::sort(plan.entries.begin(), plan.entries.end(), [&](const PlanEntry& a, const PlanEntry& b) {
    if (a.arrival_ms != b.arrival_ms) return a.arrival_ms < b.arrival_ms;
    if (a.function != b.function) return rank[a.function] < rank[b.function];
    return a.seq < b.seq;
  });
}

void check_minutes(int experiment_minutes, int warmup_minutes) {
  if (experiment_minutes <= 0 || warmup_minutes < 0 || warmup_minutes >= experiment_minutes) {
    throw Error(ErrorCode::InvalidArgument, "require 0 <= warmup_minutes < experiment_minutes");
  }
}

}  // namespace

InvocationPlan generate_invocations(std::span<const FunctionProfile> profiles, int experiment_minutes,
                                    int warmup_minutes, std::uint64_t seed) {
  check_minutes(experiment_minutes, warmup_minutes);
  InvocationPlan plan;
  plan.total_duration_ms = static_cast<TimeMs>(experiment_minutes) * 60000;
  plan.warmup_cutoff_ms = static_cast<TimeMs>(warmup_minutes) * 60000;
  plan.functions.reserve(profiles.size());

  const RngStream arrivals(seed, "arrivals");
  const RngStream durations(seed, "durations");
  for (std::size_t fi = 0; fi < profiles.size(); ++fi) {
    const auto& p = profiles[fi];
    if (static_cast<std::size_t>(experiment_minutes) > p.per_minute_counts.size()) {
      throw Error(ErrorCode::InvalidArgument, "function " + p.id + " has " +
                                                  std::to_string(p.per_minute_counts.size()) +
                                                  " minutes of counts, experiment needs " +
                                                  std::to_string(experiment_minutes));
    }
    plan.functions.push_back({p.id, p.memory_mb});
    auto arr = arrivals.substream(p.id);
    auto dur = durations.substream(p.id);
    const auto lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(p.durations.percentile_ms.front())));
    const auto hi = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(p.durations.percentile_ms.back())));
    std::uint32_t seq = 0;
    for (int m = 0; m < experiment_minutes; ++m) {
      for (std::int64_t c = 0; c < p.per_minute_counts[static_cast<std::size_t>(m)]; ++c) {
        PlanEntry e;
        e.function = static_cast<std::uint32_t>(fi);
        e.seq = seq++;
        e.arrival_ms = static_cast<TimeMs>(m) * 60000 + arr.uniform_int(0, 59999);
        auto d = static_cast<std::int64_t>(std::llround(p.durations.quantile(dur.next_unit())));
        d = lo <= hi ? std::clamp(d, lo, hi) : std::max<std::int64_t>(1, d);
        e.duration_ms = d;
        plan.entries.push_back(e);
      }
    }
  }
  sort_plan(plan);
  return plan;
}

InvocationPlan load_plan(const std::filesystem::path& path, int experiment_minutes, int warmup_minutes) {
  check_minutes(experiment_minutes, warmup_minutes);
  const auto t = csv::read(path);
  const auto c_id = t.require("HashFunction");
  const auto c_arr = t.require("ArrivalMs");
  const auto c_dur = t.require("DurationMs");
  const auto c_mem = t.require("MemoryMb");

  InvocationPlan plan;
  plan.total_duration_ms = static_cast<TimeMs>(experiment_minutes) * 60000;
  plan.warmup_cutoff_ms = static_cast<TimeMs>(warmup_minutes) * 60000;
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<std::uint32_t> next_seq;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto f = csv::split(t.rows[r]);
    if (f.size() < t.header.size()) throw Error(ErrorCode::ParseError, t.where(r) + ": too few fields");
    std::string id(f[c_id]);
    auto arr = csv::parse_int(f[c_arr]);
    auto dur = csv::parse_int(f[c_dur]);
    auto mem = csv::parse_int(f[c_mem]);
    if (!arr || !dur || !mem) throw Error(ErrorCode::ParseError, t.where(r) + ": non-integer field");
    if (*arr < 0 || *arr >= plan.total_duration_ms) {
      throw Error(ErrorCode::ParseError, t.where(r) + ": arrival outside the experiment");
    }
    if (*dur <= 0 || *mem <= 0) throw Error(ErrorCode::ParseError, t.where(r) + ": duration and memory must be > 0");
    auto [it, inserted] = index.emplace(id, static_cast<std::uint32_t>(plan.functions.size()));
    if (inserted) {
      plan.functions.push_back({id, *mem});
      next_seq.push_back(0);
    } else if (plan.functions[it->second].memory_mb != *mem) {
      throw Error(ErrorCode::ParseError, t.where(r) + ": memory differs from earlier rows of " + id);
    }
    plan.entries.push_back({*arr, it->second, next_seq[it->second]++, *dur});
  }
  sort_plan(plan);
  return plan;
}

// --- synthetic ------------------------------------------------------------------

void SyntheticTraceSpec::validate() const {
  if (num_functions <= 0 || minutes <= 0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic trace: num_functions and minutes must be > 0");
  }
  rate_per_minute.validate("synthetic.rate_per_minute");
  median_duration_ms.validate("synthetic.median_duration_ms");
  memory_mb.validate("synthetic.memory_mb");
  if (rate_per_minute.max_value() <= 0.0 || median_duration_ms.min_value() <= 0.0 || memory_mb.min_value() <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic trace: distribution parameters must be positive");
  }
  if (!(aggregate_rate_per_minute >= 0.0) || !(burst_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "synthetic trace: aggregate rate and burst sigma must be >= 0");
  }
  if (id_prefix.empty() || id_prefix.find_first_of(",\r\n\"") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "synthetic trace: id_prefix must be non-empty and CSV-safe");
  }
}

std::vector<FunctionProfile> gen_synthetic_trace(const SyntheticTraceSpec& spec, std::uint64_t seed) {
  spec.validate();
  RngStream rates(seed, "synthetic-rate");
  RngStream durations(seed, "synthetic-duration");
  RngStream memory(seed, "synthetic-memory");
  const RngStream counts(seed, "synthetic-counts");

  const auto n = static_cast<std::size_t>(spec.num_functions);
  std::vector<double> rate(n);
  for (auto& r : rate) r = spec.rate_per_minute.sample(rates);
  if (spec.aggregate_rate_per_minute > 0.0) {
    const double sum = std::accumulate(rate.begin(), rate.end(), 0.0);
    for (auto& r : rate) r *= spec.aggregate_rate_per_minute / sum;
  }

  std::vector<FunctionProfile> out(n);
  const int width = std::max(5, static_cast<int>(std::to_string(n).size()));
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = out[i];
    std::string digits = std::to_string(i);
    p.id = spec.id_prefix + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;

    const double median = std::max(1.0, spec.median_duration_ms.sample(durations));
    for (std::size_t q = 0; q < kSyntheticShape.size(); ++q) {
      p.durations.percentile_ms[q] = std::max(1.0, std::round(median * kSyntheticShape[q]));
    }
    p.durations.average_ms = p.durations.interpolated_mean();
    p.memory_mb = std::max<std::int64_t>(1, std::llround(spec.memory_mb.sample(memory)));

    auto rng = counts.substream(static_cast<std::uint64_t>(i));
    p.per_minute_counts.resize(static_cast<std::size_t>(spec.minutes));
    double carry = 0.0;
    for (auto& c : p.per_minute_counts) {
      double mean = rate[i];
      if (spec.burst_sigma > 0.0) {
        mean *= std::exp(spec.burst_sigma * rng.normal() - 0.5 * spec.burst_sigma * spec.burst_sigma);
      }
      if (spec.count_noise == SyntheticTraceSpec::CountNoise::Poisson) {
        c = poisson(rng, mean);
      } else {
        carry += mean;
        c = static_cast<std::int64_t>(std::floor(carry + 1e-9));
        carry -= static_cast<double>(c);
      }
    }
  }
  return out;
}

std::vector<FunctionProfile> gen_synthetic_mixture(std::span<const SyntheticTraceSpec> classes, std::uint64_t seed) {
  if (classes.empty()) throw Error(ErrorCode::InvalidArgument, "synthetic mixture: no classes");
  std::vector<FunctionProfile> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    if (c.minutes != classes.front().minutes) {
      throw Error(ErrorCode::InvalidArgument, "synthetic mixture: all classes must cover the same minutes");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (classes[j].id_prefix == c.id_prefix) {
        throw Error(ErrorCode::InvalidArgument, "synthetic mixture: duplicate id_prefix '" + c.id_prefix + "'");
      }
    }
    auto part = gen_synthetic_trace(c, derive_seed(seed, i));
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace faassim
