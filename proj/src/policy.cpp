// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/policy.hpp"

#include <cmath>

#include "faassim/error.hpp"

namespace faassim {

const char* to_string(PolicyVariant variant) noexcept {
  return variant == PolicyVariant::SyncKeepalive ? "sync" : "async";
}

void PolicyConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvariantViolation, "policy." + why); };
  if (variant == PolicyVariant::SyncKeepalive) {
    if (keepalive_ms <= 0) fail("keepalive_ms must be > 0");
    return;
  }
  if (!(utilization_target > 0.0 && utilization_target <= 1.0)) fail("target must be in (0, 1]");
  if (container_concurrency < 1) fail("container_concurrency must be >= 1");
  if (sample_period_ms <= 0) fail("sample_period_ms must be > 0");
  if (evaluation_period_ms <= 0) fail("evaluation_period_ms must be > 0");
  if (evaluation_period_ms % sample_period_ms != 0) {
    fail("evaluation_period_ms must be a multiple of sample_period_ms");
  }
  if (window_ms < sample_period_ms) fail("window_ms must be >= sample_period_ms");
}

// --- ConcurrencyWindow -----------------------------------------------------------

ConcurrencyWindow::ConcurrencyWindow(std::size_t capacity) : samples_(std::max<std::size_t>(capacity, 1)) {}

void ConcurrencyWindow::record(TimeMs at, double concurrency) {
  if (count_ == samples_.size()) {
    sum_ -= samples_[head_].second;
  } else {
    ++count_;
  }
  samples_[head_] = {at, concurrency};
  sum_ += concurrency;
  head_ = (head_ + 1) % samples_.size();
  // Samples are small integers in practice; reset drift when the window is all zero.
  if (sum_ < 1e-9) sum_ = 0.0;
}

double ConcurrencyWindow::average() const noexcept {
  return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_);
}

std::vector<std::pair<TimeMs, double>> ConcurrencyWindow::samples() const {
  std::vector<std::pair<TimeMs, double>> out;
  out.reserve(count_);
  const std::size_t start = (head_ + samples_.size() - count_) % samples_.size();
  for (std::size_t i = 0; i < count_; ++i) out.push_back(samples_[(start + i) % samples_.size()]);
  return out;
}

std::int64_t desired_instances(double window_avg, double utilization_target, int container_concurrency) {
  if (window_avg <= 0.0) return 0;
  const double raw = window_avg / (utilization_target * static_cast<double>(container_concurrency));
  // Quotients like 3.5 / 0.7 land a few ulps above the integer.
  return static_cast<std::int64_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
}

// --- SyncKeepalivePolicy ----------------------------------------------------------

SyncKeepalivePolicy::SyncKeepalivePolicy(const PolicyConfig& config, Cluster& cluster, Engine& engine,
                                         MemoryLookup memory)
    : config_(config), cluster_(cluster), engine_(engine), memory_(std::move(memory)) {
  config_.validate();
  if (config_.variant != PolicyVariant::SyncKeepalive) {
    throw Error(ErrorCode::InvalidArgument, "SyncKeepalivePolicy needs variant sync");
  }
}

ArrivalDecision SyncKeepalivePolicy::on_arrival(FunctionIndex function, std::uint64_t invocation, TimeMs now) {
  if (auto idle = cluster_.most_recent_idle(function)) return {ArrivalDecision::Kind::RouteTo, *idle};
  try {
    const auto id = cluster_.start_instance(function, memory_(function), 1, now, invocation);
    return {ArrivalDecision::Kind::CreateAndBind, id};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ClusterOutOfMemory) throw;
    return {ArrivalDecision::Kind::WaitForMemory, 0};
  }
}

void SyncKeepalivePolicy::on_instance_claimed(InstanceId id) {
  if (id < expiry_.size() && expiry_[id].valid()) {
    engine_.cancel(expiry_[id]);
    expiry_[id] = {};
  }
}

void SyncKeepalivePolicy::on_instance_idle(InstanceId id, TimeMs now) {
  if (id >= expiry_.size()) expiry_.resize(id + 1);
  if (expiry_[id].valid()) engine_.cancel(expiry_[id]);
  const auto& inst = cluster_.instance(id);
  expiry_[id] = engine_.schedule(now + config_.keepalive_ms, EventKind::IdleExpiry, id,
                                 static_cast<std::uint64_t>(inst.idle_since_ms));
}

bool SyncKeepalivePolicy::on_idle_expiry(InstanceId id, TimeMs idle_since, TimeMs now) {
  if (id < expiry_.size()) expiry_[id] = {};
  const auto& inst = cluster_.instance(id);
  if (inst.removed || inst.state != InstanceState::Idle || inst.idle_since_ms != idle_since) return false;
  cluster_.terminate_instance(id, now);
  return true;
}

// --- AsyncWindowPolicy -----------------------------------------------------------

AsyncWindowPolicy::AsyncWindowPolicy(const PolicyConfig& config, Cluster& cluster, MemoryLookup memory)
    : config_(config), cluster_(cluster), memory_(std::move(memory)) {
  config_.validate();
  if (config_.variant != PolicyVariant::AsyncWindow) {
    throw Error(ErrorCode::InvalidArgument, "AsyncWindowPolicy needs variant async");
  }
}

const ConcurrencyWindow& AsyncWindowPolicy::window(FunctionIndex function) {
  while (windows_.size() <= function) {
    windows_.emplace_back(static_cast<std::size_t>(config_.window_ms / config_.sample_period_ms));
  }
  return windows_[function];
}

ArrivalDecision AsyncWindowPolicy::on_arrival(FunctionIndex function, std::uint64_t, TimeMs) {
  if (auto idle = cluster_.most_recent_idle(function)) return {ArrivalDecision::Kind::RouteTo, *idle};
  if (auto slot = cluster_.least_loaded_with_slot(function)) return {ArrivalDecision::Kind::RouteTo, *slot};
  return {ArrivalDecision::Kind::Queue, 0};
}

void AsyncWindowPolicy::record_sample(FunctionIndex function, TimeMs now, double concurrency) {
  window(function);
  windows_[function].record(now, concurrency);
}

ScalingActions AsyncWindowPolicy::evaluate(FunctionIndex function, TimeMs now, std::size_t queued) {
  ScalingActions actions;
  const double avg = window(function).average();
  actions.desired = desired_instances(avg, config_.utilization_target, config_.container_concurrency);
  const auto counts = cluster_.function_counts(function);
  const std::int64_t live = counts.live();

  if (actions.desired > live) {
    if (creations_.size() <= function) creations_.resize(function + 1, 0);
    for (std::int64_t i = live; i < actions.desired; ++i) {
      const std::uint64_t key = (static_cast<std::uint64_t>(function) << 32) | creations_[function];
      try {
        actions.created.push_back(
            cluster_.start_instance(function, memory_(function), config_.container_concurrency, now, key));
        ++creations_[function];
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ClusterOutOfMemory) throw;
        actions.deferred = actions.desired - i;
        break;
      }
    }
  } else if (actions.desired < live) {
    std::int64_t excess = live - actions.desired;
    while (excess > 0) {
      auto idle = cluster_.oldest_idle(function);
      if (!idle) break;
      cluster_.terminate_instance(*idle, now);
      actions.retired.push_back(*idle);
      --excess;
    }
    if (excess > 0 && queued == 0) {
      for (auto id : cluster_.creating_instances(function)) {
        if (excess == 0) break;
        cluster_.terminate_instance(id, now);
        actions.retired.push_back(id);
        --excess;
      }
    }
  }
  return actions;
}

std::unique_ptr<AutoscalingPolicy> make_policy(const PolicyConfig& config, Cluster& cluster, Engine& engine,
                                               MemoryLookup memory) {
  if (config.variant == PolicyVariant::SyncKeepalive) {
    return std::make_unique<SyncKeepalivePolicy>(config, cluster, engine, std::move(memory));
  }
  return std::make_unique<AsyncWindowPolicy>(config, cluster, std::move(memory));
}

}  // namespace faassim
