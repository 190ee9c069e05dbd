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

// Confidence-cascaded reader inference.
//
// A cascade is a closed-book stage followed by K >= 0 open-book iterations
// reading strictly more passages each time. A question stops at the first
// stage whose confidence reaches that stage's threshold; the final stage
// answers unconditionally. Escalation is strict: a question moves on iff
// confidence < threshold, so a threshold of 0 never escalates and ties stay
// at the cheaper stage.

#ifndef QCASCADE_CASCADE_H_
#define QCASCADE_CASCADE_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcascade/cost_model.h"
#include "qcascade/error.h"
#include "qcascade/prediction.h"

namespace qcascade {

struct StageSpec {
  std::string name;
  StageKind kind = StageKind::kOpenBook;
  int passages = 0;                  // 0 for the closed-book stage.
  std::optional<double> threshold;   // Absent exactly on the final stage.

  bool operator==(const StageSpec&) const = default;
};

struct CascadePolicy {
  std::vector<StageSpec> stages;  // CB first, then K open-book iterations.
  ConfidenceMethod method = ConfidenceMethod::kProductAll;
  CostModel cost{0.0, 1.0};

  // Number of open-book iterations.
  std::size_t iterations() const { return stages.empty() ? 0 : stages.size() - 1; }
  // Passage counts S_1..S_K of the open-book iterations.
  std::vector<int> ob_passages() const;
  // Thresholds of the non-final stages, in order. Requires a valid policy.
  std::vector<double> thresholds() const;
  // Copy with the non-final thresholds replaced. Does not validate.
  CascadePolicy with_thresholds(std::span<const double> thresholds) const;
};

// Throws the Error for the first violated invariant: kInvalidInput (no
// stages, duplicate or empty names), kInvalidStageKind (stage 0 not CB, CB
// elsewhere, CB with passages), kNonIncreasingPassages,
// kThresholdOnFinalStage, kMissingThreshold, kThresholdOutOfRange.
void validate_policy(const CascadePolicy& policy);

// Index of the first non-final stage whose confidence reaches its
// threshold, else the final stage (index thresholds.size()). `confidences`
// must cover at least the stages that are visited.
std::size_t decide_exit(std::span<const double> confidences,
                        std::span<const double> thresholds);

struct CascadeOutcome {
  std::string qid;
  std::size_t exit_stage = 0;
  std::string prediction;
  double confidence_at_exit = 0.0;
  EscalationPath path{{}, {}};
  double cost = 0.0;
  std::optional<bool> correct;  // Set when gold answers are known.

  bool operator==(const CascadeOutcome&) const = default;
};

// Evaluates a policy against per-stage logs. Questions are the qids of the
// stage-0 log, in lexicographic order. A later-stage record is looked up
// only when the cascade actually escalates into it; records beyond the
// exit stage are never read or charged. Correctness uses the exit record's
// gold answers, falling back to the stage-0 record's.
//
// Throws kMissingStageRecord when escalation needs an absent record, plus
// anything validate_policy throws.
std::vector<CascadeOutcome> run_offline(const PredictionLog& logs,
                                        const CascadePolicy& policy);

// ---------------------------------------------------------------------------
// Live execution.

// Request and response of the per-stage prediction service.
struct BackendRequest {
  std::string question;
  std::vector<std::string> passages;  // Empty for closed-book stages.
  int max_new_tokens = 32;
};

struct BackendResponse {
  std::string prediction;
  std::vector<double> token_probs;
};

// One prediction service per stage. Implementations throw
// Error(kBackendUnreachable) or Error(kMalformedBackendResponse).
class StageBackend {
 public:
  virtual ~StageBackend() = default;
  virtual BackendResponse predict(const BackendRequest& request) = 0;
};

struct LiveQuestion {
  std::string qid;
  std::string question;
  std::vector<std::string> passages;  // Retriever-ranked; stage k reads S_k.
  std::optional<std::vector<std::string>> gold;
};

struct LiveFailure {
  std::string qid;
  std::size_t stage = 0;
  ErrorCode code = ErrorCode::kBackendUnreachable;
  std::string message;
};

struct LiveOptions {
  int max_new_tokens = 32;
  std::size_t workers = 1;  // Questions processed concurrently.
};

struct LiveResult {
  std::vector<CascadeOutcome> outcomes;  // Sorted by qid.
  std::vector<LiveFailure> failures;     // Sorted by qid.
};

// Online counterpart of run_offline. Stage k+1 of a question is queried only
// after stage k came back insufficiently confident; distinct questions may
// run concurrently. A backend failure aborts only that question. A question
// with fewer passages than S_k sends all it has. Backends must be safe to
// call from `options.workers` threads at once.
LiveResult run_live(std::span<StageBackend* const> backends,
                    const CascadePolicy& policy,
                    std::span<const LiveQuestion> questions,
                    const LiveOptions& options = {});

}  // namespace qcascade

#endif  // QCASCADE_CASCADE_H_
