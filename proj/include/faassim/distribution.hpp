// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "faassim/rng.hpp"

namespace faassim {

/// A scalar distribution as used by cost models and synthetic trace specs.
/// LogNormal draws are truncated to [lo, hi] by rejection.
struct Distribution {
  enum class Kind { Deterministic, Uniform, LogNormal };

  Kind kind = Kind::Deterministic;
  double value = 0.0;  // Deterministic
  double lo = 0.0;     // Uniform bounds / LogNormal truncation
  double hi = 0.0;
  double mu = 0.0;     // LogNormal, of ln(x)
  double sigma = 0.0;

  static Distribution fixed(double v);
  static Distribution uniform(double lo, double hi);
  static Distribution lognormal(double mu, double sigma, double lo, double hi);

  double sample(RngStream& rng) const;

  /// Same draw rounded to integer milliseconds, never below `lo` (or the
  /// fixed value) after rounding.
  std::int64_t sample_ms(RngStream& rng) const;

  double min_value() const;
  double max_value() const;

  /// Throws Error(InvalidArgument) unless 0 <= lo <= hi and the kind's
  /// parameters are usable.
  void validate(const std::string& what) const;

  bool operator==(const Distribution&) const = default;
};

const char* to_string(Distribution::Kind kind) noexcept;

}  // namespace faassim
