// Copyright 2026 The qcascade Authors.
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

#include "qcascade/error.h"

namespace qcascade {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kNonIncreasingPassages: return "NonIncreasingPassages";
    case ErrorCode::kThresholdOnFinalStage: return "ThresholdOnFinalStage";
    case ErrorCode::kMissingThreshold: return "MissingThreshold";
    case ErrorCode::kThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorCode::kInvalidStageKind: return "InvalidStageKind";
    case ErrorCode::kMissingStageRecord: return "MissingStageRecord";
    case ErrorCode::kDuplicateRecord: return "DuplicateRecord";
    case ErrorCode::kBackendUnreachable: return "BackendUnreachable";
    case ErrorCode::kMalformedBackendResponse: return "MalformedBackendResponse";
    case ErrorCode::kGridTooLarge: return "GridTooLarge";
    case ErrorCode::kTargetUnreachable: return "TargetUnreachable";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace qcascade
