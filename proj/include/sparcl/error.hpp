// Copyright 2026 The sparcl-kit Authors.
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

namespace sparcl {

enum class ErrorCode {
  kZeroRow,
  kDimMismatch,
  kShapeMismatch,
  kEmptyMap,
  kChannelMismatch,
  kImpossibleEdit,
  kInvalidCount,
  kIndexOutOfRange,
  kInvalidMode,
  kInvalidConfig,
  kInvalidParams,
  kEmptyEvalSet,
  kDivergenceDetected,
  kIoError,
  kCorruptHeader,
  kChecksumMismatch,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroRow: return "ZeroRow";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyMap: return "EmptyMap";
    case ErrorCode::kChannelMismatch: return "ChannelMismatch";
    case ErrorCode::kImpossibleEdit: return "ImpossibleEdit";
    case ErrorCode::kInvalidCount: return "InvalidCount";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidMode: return "InvalidMode";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kEmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
  }
  return "Unknown";
}

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sparcl
