// Copyright 2026 The faassim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace faassim {

enum class ErrorCode {
  ParseError,
  MissingColumn,
  UnknownFunctionId,
  NonMonotonePercentiles,
  NegativeCount,
  InvalidProfile,
  InsufficientFunctions,
  SchedulingInPast,
  HandlerPanic,
  ClusterOutOfMemory,
  TerminateBusyInstance,
  ConcurrencyExceeded,
  IllegalTransition,
  BindingViolation,
  EmptyFunction,
  NonPositiveSlowdown,
  ZeroBusyIntegral,
  ZeroUsefulWork,
  UnknownKey,
  InvariantViolation,
  Io,
  InvalidArgument,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the simulator core carries one of the codes above;
/// the C API maps them onto status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace faassim
