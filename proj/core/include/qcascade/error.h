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

#ifndef QCASCADE_ERROR_H_
#define QCASCADE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace qcascade {

enum class ErrorCode {
  kInvalidInput,
  // Policy validation.
  kNonIncreasingPassages,
  kThresholdOnFinalStage,
  kMissingThreshold,
  kThresholdOutOfRange,
  kInvalidStageKind,
  // Cascade execution.
  kMissingStageRecord,
  kDuplicateRecord,
  kBackendUnreachable,
  kMalformedBackendResponse,
  // Curves.
  kGridTooLarge,
  kTargetUnreachable,
  // File formats.
  kMalformedLine,
  kSchemaViolation,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported as qcascade::Error. The message always
// starts with the code name so that CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace qcascade

#endif  // QCASCADE_ERROR_H_
