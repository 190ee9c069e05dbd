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

// File formats.
//
// Prediction logs are JSONL, one record per line:
//   {"qid": "q1", "stage": "ob20", "question": "...", "prediction": "...",
//    "token_probs": [0.9, 0.8], "n_passages": 20, "gold": ["..."]}
// `gold` is optional. Blank lines are skipped.
//
// Policies are a single JSON document:
//   {"method": "ppa",
//    "cost": {"c_cb": 6.15e9, "c_ob_per_passage": 2.02e10,
//             "mode": "upper_bound"},
//    "stages": [{"name": "cb", "kind": "cb", "passages": 0, "threshold": 0.5},
//               {"name": "ob20", "kind": "ob", "passages": 20}]}
//
// Curves are CSV with the header `cost_flops,accuracy,thresholds`; the
// thresholds column is a semicolon-joined list and may be empty.
//
// Every error raised while reading carries "<file>:<line>:" context.

#ifndef QCASCADE_IO_H_
#define QCASCADE_IO_H_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qcascade/cascade.h"
#include "qcascade/curves.h"
#include "qcascade/prediction.h"
#include "qcascade/synth.h"

namespace qcascade {

// One JSONL line to a record. Throws kMalformedLine for text that is not a
// JSON object (or not UTF-8) and kSchemaViolation naming the bad field.
PredictionRecord parse_record(std::string_view line);
std::string serialize_record(const PredictionRecord& record);

// Appends every record of `in` to `logs`. `source` names the input in
// error messages.
void read_log_stream(std::istream& in, const std::string& source,
                     PredictionLog& logs);
PredictionLog parse_logs(std::span<const std::filesystem::path> paths);

// All records, ordered by stage then qid.
void write_log(std::ostream& out, const PredictionLog& logs);
// One `<stage>.jsonl` file per stage. Returns the written paths.
std::vector<std::filesystem::path> write_log_dir(const std::filesystem::path& dir,
                                                 const PredictionLog& logs);

// Policy documents. The result has passed validate_policy.
CascadePolicy parse_policy(std::string_view json_text, const std::string& source);
CascadePolicy load_policy(const std::filesystem::path& path);
std::string serialize_policy(const CascadePolicy& policy);

// Consistency of logs with a policy: stage-0 records exist, closed-book
// records carry 0 passages, open-book records carry the stage's S_k, and
// every log stage is named by the policy. Returns one message per problem.
std::vector<std::string> check_logs_against_policy(const PredictionLog& logs,
                                                   const CascadePolicy& policy);

// Synthetic generator config:
//   {"n_questions": 2000, "seed": 7, "difficulty_sharpness": 6,
//    "calibration": 0.8, "answer_token_count": 3,
//    "stages": [{"name": "cb", "passages": 0, "capability": 0.45}, ...]}
SynthConfig parse_synth_config(std::string_view json_text, const std::string& source);
SynthConfig load_synth_config(const std::filesystem::path& path);

// Questions for live runs, JSONL: {"qid", "question", "gold"?, "passages"}.
std::vector<LiveQuestion> load_questions(const std::filesystem::path& path);

void write_curve_csv(std::ostream& out, const AccuracyCostCurve& curve);
AccuracyCostCurve read_curve_csv(std::istream& in, const std::string& source);
AccuracyCostCurve load_curve_csv(const std::filesystem::path& path);

// One JSON object per outcome, for per-question dumps.
std::string serialize_outcome(const CascadeOutcome& outcome,
                              const CascadePolicy& policy);

// Whole file as a string. Throws kIoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace qcascade

#endif  // QCASCADE_IO_H_
