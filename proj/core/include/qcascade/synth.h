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

// Synthetic prediction logs with controllable stage capability and
// confidence calibration.
//
// Question i gets a difficulty d_i ~ U(0, 1). Stage k answers it correctly
// with probability sigmoid(a * (c_k - d_i)). A correct answer's confidence
// is drawn from Beta(2 + 8 rho, 2), a wrong one's from Beta(2, 2 + 8 rho), so
// rho = 0 makes confidence uninformative and rho = 1 makes it sharply
// separated. The n answer tokens each carry score^(1/n), which makes the
// product of token probabilities equal to the drawn score.

#ifndef QCASCADE_SYNTH_H_
#define QCASCADE_SYNTH_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcascade/prediction.h"

namespace qcascade {

struct SynthStage {
  std::string name;
  int passages = 0;
  double capability = 0.5;  // c_k in [0, 1].
};

struct SynthConfig {
  std::size_t n_questions = 1000;
  std::vector<SynthStage> stages;
  double sharpness = 6.0;    // a > 0.
  double calibration = 0.8;  // rho in [0, 1].
  int answer_tokens = 3;     // n >= 1.
  std::uint64_t seed = 0;
};

// Throws Error(kInvalidInput) naming the first bad field.
void validate_synth_config(const SynthConfig& config);

// Zero-padded qid of question i, e.g. "q000042".
std::string synth_qid(std::size_t index);

// Records for every question at every stage, with gold answers. Question i
// draws from its own generator seeded from (seed, qid), so the output does
// not depend on generation order or on `workers`.
PredictionLog generate(const SynthConfig& config, std::size_t workers = 1);

struct StageCalibration {
  std::string stage;
  std::size_t records = 0;
  double accuracy = 0.0;
  double correlation = 0.0;  // Pearson, 0 when either side has no variance.
  std::optional<double> mean_confidence_correct;
  std::optional<double> mean_confidence_incorrect;
};

struct CalibrationReport {
  ConfidenceMethod method = ConfidenceMethod::kProductAll;
  std::vector<StageCalibration> stages;  // Sorted by stage name.
};

// Per-stage accuracy and confidence/correctness statistics. Throws
// Error(kInvalidInput) on empty logs or records without gold answers.
CalibrationReport calibration_report(const PredictionLog& logs,
                                     ConfidenceMethod method);

// Pearson correlation, 0 if either input has zero variance. Inputs must
// have equal, non-zero length.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

std::string format_report(const CalibrationReport& report);

}  // namespace qcascade

#endif  // QCASCADE_SYNTH_H_
