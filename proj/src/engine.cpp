// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/engine.hpp"

#include <algorithm>
#include <string>

#include "faassim/error.hpp"

namespace faassim {

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::RequestArrival: return "RequestArrival";
    case EventKind::InstanceReady: return "InstanceReady";
    case EventKind::RequestComplete: return "RequestComplete";
    case EventKind::IdleExpiry: return "IdleExpiry";
    case EventKind::ScaleEvaluation: return "ScaleEvaluation";
    case EventKind::MetricsSample: return "MetricsSample";
    case EventKind::ConcurrencySample: return "ConcurrencySample";
  }
  return "Unknown";
}

EventHandle Engine::schedule(TimeMs fire_at, EventKind kind, std::uint64_t subject, std::uint64_t aux) {
  if (fire_at < now_) {
    throw Error(ErrorCode::SchedulingInPast, std::string(to_string(kind)) + " at t=" + std::to_string(fire_at) +
                                                 " while clock is t=" + std::to_string(now_));
  }
  SimEvent ev{fire_at, next_seq_++, kind, subject, aux};
  heap_.push_back(ev);
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  live_.insert(ev.seq);
  return EventHandle{ev.seq};
}

bool Engine::cancel(EventHandle handle) {
  if (!handle.valid() || live_.erase(handle.seq) == 0) return false;
  cancelled_.insert(handle.seq);
  return true;
}

RunStats Engine::run(TimeMs until, const Handler& handler) {
  RunStats stats;
  stop_requested_ = false;
  while (!heap_.empty() && !stop_requested_) {
    if (heap_.front().fire_at > until) break;
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    const SimEvent ev = heap_.back();
    heap_.pop_back();
    if (cancelled_.erase(ev.seq) != 0) continue;
    live_.erase(ev.seq);
    now_ = ev.fire_at;
    if (log_ != nullptr) {
      *log_ << ev.fire_at << ' ' << ev.seq << ' ' << to_string(ev.kind) << ' ' << ev.subject << ' ' << ev.aux
            << '\n';
    }
    try {
      handler(ev);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::HandlerPanic,
                  std::string(to_string(ev.kind)) + " at t=" + std::to_string(ev.fire_at) + ": " + e.what());
    }
    ++processed_;
    ++stats.events_processed;
  }
  if (until != kForever && !stop_requested_) now_ = std::max(now_, until);
  return stats;
}

}  // namespace faassim
