// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otibsn {

enum class ErrorCode {
  InvalidCost,
  MarginalNotPositive,
  MarginalNotNormalized,
  ShapeMismatch,
  InvalidConfig,
  NumericalOverflow,
  InconsistentSystem,
  NotPositiveDefinite,
  LineSearchStalled,
  WarmStartStalled,
  NumericalFailure,
  TestOnlyLimit,
  OracleTooLarge,
  OracleFailed,
  LoadError,
  ClockError,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidCost: return "InvalidCost";
    case ErrorCode::MarginalNotPositive: return "MarginalNotPositive";
    case ErrorCode::MarginalNotNormalized: return "MarginalNotNormalized";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NumericalOverflow: return "NumericalOverflow";
    case ErrorCode::InconsistentSystem: return "InconsistentSystem";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::LineSearchStalled: return "LineSearchStalled";
    case ErrorCode::WarmStartStalled: return "WarmStartStalled";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::TestOnlyLimit: return "TestOnlyLimit";
    case ErrorCode::OracleTooLarge: return "OracleTooLarge";
    case ErrorCode::OracleFailed: return "OracleFailed";
    case ErrorCode::LoadError: return "LoadError";
    case ErrorCode::ClockError: return "ClockError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is deterministic for a given input.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace otibsn
