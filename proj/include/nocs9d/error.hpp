// Copyright 2026 The nocs9d Authors.
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace nocs9d {

enum class ErrorCode {
  kInvalidTransform,
  kDimension,
  kEmptyRegion,
  kAnnotation,
  kInsufficientPoints,
  kDegenerate,
  kNoConsensus,
  kEmptyInput,
  kInsufficientSamples,
  kParse,
  kIntegrity,
  kValidation,
  kIo,
  kEmptyRender,
  kReconciliation,
  kInvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidTransform: return "invalid-transform";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kEmptyRegion: return "empty-region";
    case ErrorCode::kAnnotation: return "annotation";
    case ErrorCode::kInsufficientPoints: return "insufficient-points";
    case ErrorCode::kDegenerate: return "degenerate-configuration";
    case ErrorCode::kNoConsensus: return "no-consensus";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kInsufficientSamples: return "insufficient-samples";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kEmptyRender: return "empty-render";
    case ErrorCode::kReconciliation: return "reconciliation";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

// Every failure raised by the library carries one of the codes above so
// callers (CLI exit paths, bindings) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + " error: " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nocs9d
