// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#include "faassim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "faassim/distribution.hpp"
#include "faassim/error.hpp"

namespace faassim {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnknownFunctionId: return "UnknownFunctionId";
    case ErrorCode::NonMonotonePercentiles: return "NonMonotonePercentiles";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::InsufficientFunctions: return "InsufficientFunctions";
    case ErrorCode::SchedulingInPast: return "SchedulingInPast";
    case ErrorCode::HandlerPanic: return "HandlerPanic";
    case ErrorCode::ClusterOutOfMemory: return "ClusterOutOfMemory";
    case ErrorCode::TerminateBusyInstance: return "TerminateBusyInstance";
    case ErrorCode::ConcurrencyExceeded: return "ConcurrencyExceeded";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::BindingViolation: return "BindingViolation";
    case ErrorCode::EmptyFunction: return "EmptyFunction";
    case ErrorCode::NonPositiveSlowdown: return "NonPositiveSlowdown";
    case ErrorCode::ZeroBusyIntegral: return "ZeroBusyIntegral";
    case ErrorCode::ZeroUsefulWork: return "ZeroUsefulWork";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
  // Lemire-style rejection keeps the result unbiased.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % span);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return lo + static_cast<std::int64_t>(x % span);
}

double RngStream::normal() noexcept {
  double u1 = next_unit();
  const double u2 = next_unit();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// --- Distribution -----------------------------------------------------------

Distribution Distribution::fixed(double v) {
  Distribution d;
  d.kind = Kind::Deterministic;
  d.value = v;
  d.lo = v;
  d.hi = v;
  return d;
}

Distribution Distribution::uniform(double lo, double hi) {
  Distribution d;
  d.kind = Kind::Uniform;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Distribution Distribution::lognormal(double mu, double sigma, double lo, double hi) {
  Distribution d;
  d.kind = Kind::LogNormal;
  d.mu = mu;
  d.sigma = sigma;
  d.lo = lo;
  d.hi = hi;
  return d;
}

double Distribution::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::Deterministic:
      return value;
    case Kind::Uniform:
      return lo + (hi - lo) * rng.next_unit();
    case Kind::LogNormal: {
      for (int attempt = 0; attempt < 64; ++attempt) {
        const double x = std::exp(mu + sigma * rng.normal());
        if (x >= lo && x <= hi) return x;
      }
      // Pathological truncation; fall back to the nearest bound.
      return std::clamp(std::exp(mu), lo, hi);
    }
  }
  return value;
}

std::int64_t Distribution::sample_ms(RngStream& rng) const {
  const double x = sample(rng);
  auto ms = static_cast<std::int64_t>(std::llround(x));
  const auto floor_ms = static_cast<std::int64_t>(std::ceil(min_value()));
  const auto ceil_ms = static_cast<std::int64_t>(std::floor(max_value()));
  if (floor_ms <= ceil_ms) ms = std::clamp(ms, floor_ms, ceil_ms);
  return std::max<std::int64_t>(ms, 0);
}

double Distribution::min_value() const { return kind == Kind::Deterministic ? value : lo; }
double Distribution::max_value() const { return kind == Kind::Deterministic ? value : hi; }

void Distribution::validate(const std::string& what) const {
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::InvalidArgument, what + ": " + why); };
  switch (kind) {
    case Kind::Deterministic:
      if (!(value >= 0.0) || !std::isfinite(value)) fail("value must be finite and >= 0");
      break;
    case Kind::Uniform:
      if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) fail("requires 0 <= lo <= hi");
      break;
    case Kind::LogNormal:
      if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) fail("requires 0 <= lo <= hi");
      if (!(sigma >= 0.0) || !std::isfinite(mu)) fail("requires finite mu and sigma >= 0");
      break;
  }
}

const char* to_string(Distribution::Kind kind) noexcept {
  switch (kind) {
    case Distribution::Kind::Deterministic: return "deterministic";
    case Distribution::Kind::Uniform: return "uniform";
    case Distribution::Kind::LogNormal: return "lognormal";
  }
  return "deterministic";
}

}  // namespace faassim
