// Copyright 2026 The OrCo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace orco {

/// Every failure the pipeline can report. Grouped by the module that raises it.
enum class ErrorCode {
  // tle_catalog
  LineLength,
  ChecksumMismatch,
  FieldSyntax,
  IdMismatch,
  IoFailure,
  AuthFailure,
  RateLimited,
  InvalidRange,
  // propagator
  DeepSpaceUnsupported,
  DecayedOrbit,
  HorizonExceeded,
  EmptyWindow,
  // uncertainty
  DegenerateCloud,
  CholeskyFailure,
  SegmentUnderflow,
  // conjunction / probability
  DegenerateEncounter,
  SingularCovariance,
  ContourNotClosed,
  // generic
  InvalidArgument,
  NotFound,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LineLength: return "LineLength";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::FieldSyntax: return "FieldSyntax";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::DeepSpaceUnsupported: return "DeepSpaceUnsupported";
    case ErrorCode::DecayedOrbit: return "DecayedOrbit";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::SegmentUnderflow: return "SegmentUnderflow";
    case ErrorCode::DegenerateEncounter: return "DegenerateEncounter";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::ContourNotClosed: return "ContourNotClosed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

/// Exception carrying a typed code. `retry_after_s` is only set for RateLimited.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<double> retry_after_s = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message),
        retry_after_s_(retry_after_s) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }
  [[nodiscard]] std::optional<double> retry_after_s() const noexcept { return retry_after_s_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::optional<double> retry_after_s_;
};

}  // namespace orco
