// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "faassim/cluster.hpp"
#include "faassim/engine.hpp"

namespace faassim {

enum class PolicyVariant { SyncKeepalive, AsyncWindow };

const char* to_string(PolicyVariant variant) noexcept;

struct PolicyConfig {
  PolicyVariant variant = PolicyVariant::SyncKeepalive;
  // SyncKeepalive
  TimeMs keepalive_ms = 600000;
  // AsyncWindow
  TimeMs window_ms = 60000;
  double utilization_target = 0.7;
  int container_concurrency = 1;
  TimeMs evaluation_period_ms = 2000;
  TimeMs sample_period_ms = 1000;

  /// Throws Error(InvariantViolation) naming the offending field.
  void validate() const;

  /// Instance concurrency limit implied by the variant (sync is always 1).
  int instance_concurrency() const noexcept {
    return variant == PolicyVariant::AsyncWindow ? container_concurrency : 1;
  }

  bool operator==(const PolicyConfig&) const = default;
};

/// Ring buffer of concurrency samples for one function.
class ConcurrencyWindow {
 public:
  explicit ConcurrencyWindow(std::size_t capacity);

  void record(TimeMs at, double concurrency);
  /// Mean of the samples present (0 when empty).
  double average() const noexcept;
  std::size_t size() const noexcept { return count_; }
  std::size_t capacity() const noexcept { return samples_.size(); }
  /// Oldest first.
  std::vector<std::pair<TimeMs, double>> samples() const;

 private:
  std::vector<std::pair<TimeMs, double>> samples_;
  std::size_t head_ = 0;  // next write position
  std::size_t count_ = 0;
  double sum_ = 0.0;
};

/// ceil(window_avg / (target * cc)); 0 when window_avg is 0.
std::int64_t desired_instances(double window_avg, double utilization_target, int container_concurrency);

struct ArrivalDecision {
  enum class Kind {
    RouteTo,        // dispatch to `instance` now
    CreateAndBind,  // `instance` was started for this request alone
    Queue,          // wait in the function's FIFO for any instance
    WaitForMemory,  // no capacity and the cluster is out of memory
  };
  Kind kind = Kind::Queue;
  InstanceId instance = 0;
};

struct ScalingActions {
  std::vector<InstanceId> created;
  std::vector<InstanceId> retired;
  std::int64_t desired = 0;
  std::int64_t deferred = 0;  // creations blocked by ClusterOutOfMemory
};

/// Callbacks from the router and engine into an autoscaling policy. Both
/// variants share this surface; hooks a variant does not need are no-ops.
class AutoscalingPolicy {
 public:
  virtual ~AutoscalingPolicy() = default;

  virtual const PolicyConfig& config() const noexcept = 0;

  /// Called for a new arrival when the function has no queued backlog.
  virtual ArrivalDecision on_arrival(FunctionIndex function, std::uint64_t invocation, TimeMs now) = 0;

  /// An Idle instance is about to receive a request.
  virtual void on_instance_claimed(InstanceId) {}
  /// An instance just became Idle with nothing left to dispatch to it.
  virtual void on_instance_idle(InstanceId, TimeMs) {}
  /// IdleExpiry fired; returns true when the instance was terminated.
  virtual bool on_idle_expiry(InstanceId, TimeMs /*idle_since*/, TimeMs) { return false; }

  virtual void record_sample(FunctionIndex, TimeMs, double /*concurrency*/) {}
  virtual ScalingActions evaluate(FunctionIndex, TimeMs, std::size_t /*queued*/) { return {}; }
};

using MemoryLookup = std::function<std::int64_t(FunctionIndex)>;

/// Fixed keepalive: create on the critical path when no idle instance
/// exists, reuse the most recently idled instance, and terminate instances
/// idle for `keepalive_ms`.
class SyncKeepalivePolicy final : public AutoscalingPolicy {
 public:
  SyncKeepalivePolicy(const PolicyConfig& config, Cluster& cluster, Engine& engine, MemoryLookup memory);

  const PolicyConfig& config() const noexcept override { return config_; }
  ArrivalDecision on_arrival(FunctionIndex function, std::uint64_t invocation, TimeMs now) override;
  void on_instance_claimed(InstanceId id) override;
  void on_instance_idle(InstanceId id, TimeMs now) override;
  bool on_idle_expiry(InstanceId id, TimeMs idle_since, TimeMs now) override;

 private:
  PolicyConfig config_;
  Cluster& cluster_;
  Engine& engine_;
  MemoryLookup memory_;
  std::vector<EventHandle> expiry_;  // by instance id
};

/// Window-averaged concurrency: samples in-flight plus queued requests every
/// sample period and, every evaluation period, converges the live instance
/// count on desired_instances(). Scale-down retires Idle instances oldest
/// idle first, then Creating instances only when nothing is queued.
class AsyncWindowPolicy final : public AutoscalingPolicy {
 public:
  AsyncWindowPolicy(const PolicyConfig& config, Cluster& cluster, MemoryLookup memory);

  const PolicyConfig& config() const noexcept override { return config_; }
  ArrivalDecision on_arrival(FunctionIndex function, std::uint64_t invocation, TimeMs now) override;
  void record_sample(FunctionIndex function, TimeMs now, double concurrency) override;
  ScalingActions evaluate(FunctionIndex function, TimeMs now, std::size_t queued) override;

  const ConcurrencyWindow& window(FunctionIndex function);

 private:
  PolicyConfig config_;
  Cluster& cluster_;
  MemoryLookup memory_;
  std::vector<ConcurrencyWindow> windows_;
  std::vector<std::uint32_t> creations_;  // per function, keys creation-delay draws
};

std::unique_ptr<AutoscalingPolicy> make_policy(const PolicyConfig& config, Cluster& cluster, Engine& engine,
                                               MemoryLookup memory);

}  // namespace faassim
