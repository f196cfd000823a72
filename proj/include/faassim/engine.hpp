// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <unordered_set>
#include <vector>

namespace faassim {

/// Virtual time, integer milliseconds since experiment start.
using TimeMs = std::int64_t;

inline constexpr TimeMs kForever = std::numeric_limits<TimeMs>::max();

enum class EventKind : std::uint8_t {
  RequestArrival,
  InstanceReady,
  RequestComplete,
  IdleExpiry,
  ScaleEvaluation,
  MetricsSample,
  ConcurrencySample,
};

const char* to_string(EventKind kind) noexcept;

/// `subject` and `aux` are interpreted per kind by whoever schedules the
/// event (invocation index, instance id, function index, ...).
struct SimEvent {
  TimeMs fire_at = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::RequestArrival;
  std::uint64_t subject = 0;
  std::uint64_t aux = 0;
};

struct EventHandle {
  std::uint64_t seq = 0;
  bool valid() const noexcept { return seq != 0; }
};

struct RunStats {
  std::uint64_t events_processed = 0;
};

/// Deterministic discrete-event core.
///
/// Events fire in (fire_at, seq) order; seq is assigned at scheduling time and
/// is unique per engine. Cancellation is by tombstone: the event stays in the
/// heap and is skipped when popped. Single-threaded.
class Engine {
 public:
  using Handler = std::function<void(const SimEvent&)>;

  TimeMs now() const noexcept { return now_; }

  /// Throws Error(SchedulingInPast) when fire_at < now().
  EventHandle schedule(TimeMs fire_at, EventKind kind, std::uint64_t subject = 0, std::uint64_t aux = 0);

  /// Returns false when the handle already fired or was cancelled.
  bool cancel(EventHandle handle);

  /// Process events with fire_at <= until. On return the clock equals `until`
  /// unless until == kForever, in which case it stays at the last event time.
  /// Handler exceptions surface as Error(HandlerPanic) naming the event.
  RunStats run(TimeMs until, const Handler& handler);

  /// Ask a running `run` to return after the current event.
  void stop() noexcept { stop_requested_ = true; }

  std::size_t pending() const noexcept { return heap_.size() - cancelled_.size(); }
  bool empty() const noexcept { return pending() == 0; }
  std::uint64_t events_processed() const noexcept { return processed_; }

  /// One line per processed event: "<timeMs> <seq> <Kind> <subject> <aux>".
  void set_event_log(std::ostream* log) noexcept { log_ = log; }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const noexcept {
      return a.fire_at != b.fire_at ? a.fire_at > b.fire_at : a.seq > b.seq;
    }
  };

  std::vector<SimEvent> heap_;
  std::unordered_set<std::uint64_t> cancelled_;
  std::unordered_set<std::uint64_t> live_;
  TimeMs now_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t processed_ = 0;
  bool stop_requested_ = false;
  std::ostream* log_ = nullptr;
};

}  // namespace faassim
