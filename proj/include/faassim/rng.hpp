// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace faassim {

/// SplitMix64 finalizer. Stable for the lifetime of the repository; every
/// seed derivation and every random draw in the simulator goes through it.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the label bytes.
constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) noexcept {
  return mix64(master ^ mix64(salt + 0x9e3779b97f4a7c15ULL));
}

/// A named, counter-based random stream (SplitMix64 over a per-stream key).
///
/// The key is derived from (master seed, stream id), so adding a new consumer
/// with a fresh id never perturbs the draws seen by existing consumers.
/// `substream(k)` yields an independent stream addressed by an integer key,
/// which lets callers attach draws to an entity (an invocation, a function)
/// instead of to the order in which draws happen to be requested.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t master_seed, std::string_view stream_id)
      : key_(derive_seed(master_seed, hash_label(stream_id))) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_unit() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] (inclusive). Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal() noexcept;

  RngStream substream(std::uint64_t key) const noexcept {
    RngStream s;
    s.key_ = derive_seed(key_, key);
    return s;
  }
  RngStream substream(std::string_view label) const noexcept { return substream(hash_label(label)); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace faassim
