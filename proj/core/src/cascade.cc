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

#include "qcascade/cascade.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "parallel.h"
#include "qcascade/error.h"

namespace qcascade {

std::vector<int> CascadePolicy::ob_passages() const {
  std::vector<int> out;
  for (std::size_t i = 1; i < stages.size(); ++i) out.push_back(stages[i].passages);
  return out;
}

std::vector<double> CascadePolicy::thresholds() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    out.push_back(stages[i].threshold.value_or(0.0));
  }
  return out;
}

CascadePolicy CascadePolicy::with_thresholds(
    std::span<const double> thresholds) const {
  CascadePolicy copy = *this;
  for (std::size_t i = 0; i + 1 < copy.stages.size() && i < thresholds.size(); ++i) {
    copy.stages[i].threshold = thresholds[i];
  }
  return copy;
}

void validate_policy(const CascadePolicy& policy) {
  if (policy.stages.empty()) {
    throw Error(ErrorCode::kInvalidInput, "policy has no stages");
  }
  std::set<std::string, std::less<>> names;
  int previous_passages = 0;
  for (std::size_t i = 0; i < policy.stages.size(); ++i) {
    const StageSpec& s = policy.stages[i];
    const bool final_stage = i + 1 == policy.stages.size();
    if (s.name.empty()) {
      throw Error(ErrorCode::kInvalidInput, fmt::format("stage {} has no name", i));
    }
    if (!names.insert(s.name).second) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("duplicate stage name '{}'", s.name));
    }
    if (i == 0 && s.kind != StageKind::kClosedBook) {
      throw Error(ErrorCode::kInvalidStageKind,
                  fmt::format("stage 0 ('{}') must be closed-book", s.name));
    }
    if (i > 0 && s.kind == StageKind::kClosedBook) {
      throw Error(ErrorCode::kInvalidStageKind,
                  fmt::format("closed-book stage '{}' at position {}", s.name, i));
    }
    if (s.kind == StageKind::kClosedBook && s.passages != 0) {
      throw Error(ErrorCode::kInvalidStageKind,
                  fmt::format("closed-book stage '{}' has {} passages", s.name,
                              s.passages));
    }
    if (s.kind == StageKind::kOpenBook && s.passages <= previous_passages) {
      throw Error(ErrorCode::kNonIncreasingPassages,
                  fmt::format("stage '{}' reads {} passages after {}", s.name,
                              s.passages, previous_passages));
    }
    if (final_stage && s.threshold.has_value()) {
      throw Error(ErrorCode::kThresholdOnFinalStage,
                  fmt::format("final stage '{}' has a threshold", s.name));
    }
    if (!final_stage && !s.threshold.has_value()) {
      throw Error(ErrorCode::kMissingThreshold,
                  fmt::format("stage '{}' has no threshold", s.name));
    }
    if (s.threshold.has_value() && !(*s.threshold >= 0.0 && *s.threshold <= 1.0)) {
      throw Error(ErrorCode::kThresholdOutOfRange,
                  fmt::format("stage '{}' threshold {} is outside [0, 1]", s.name,
                              *s.threshold));
    }
    previous_passages = s.passages;
  }
}

std::size_t decide_exit(std::span<const double> confidences,
                        std::span<const double> thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(confidences[i] < thresholds[i])) return i;
  }
  return thresholds.size();
}

namespace {

std::optional<bool> resolve_correct(const std::string& prediction,
                                    const std::optional<std::vector<std::string>>& gold,
                                    const std::optional<std::vector<std::string>>& fallback) {
  const auto& golds = gold.has_value() ? gold : fallback;
  if (!golds.has_value() || golds->empty()) return std::nullopt;
  return exact_match(prediction, *golds);
}

}  // namespace

std::vector<CascadeOutcome> run_offline(const PredictionLog& logs,
                                        const CascadePolicy& policy) {
  validate_policy(policy);
  const auto* first = logs.stage(policy.stages.front().name);
  if (first == nullptr) return {};

  const std::vector<double> thresholds = policy.thresholds();
  const std::vector<int> passages = policy.ob_passages();
  std::vector<CascadeOutcome> outcomes;
  outcomes.reserve(first->size());

  for (const auto& [qid, first_record] : *first) {
    const PredictionRecord* exit_record = &first_record;
    double exit_confidence = confidence(policy.method, first_record.token_probs);
    std::size_t exit = 0;
    // Visits stages one at a time so that later records are only required
    // when the cascade really escalates.
    while (exit < thresholds.size() && exit_confidence < thresholds[exit]) {
      ++exit;
      const std::string& stage_name = policy.stages[exit].name;
      exit_record = logs.find(stage_name, qid);
      if (exit_record == nullptr) {
        throw Error(ErrorCode::kMissingStageRecord,
                    fmt::format("qid '{}' stage '{}'", qid, stage_name));
      }
      exit_confidence = confidence(policy.method, exit_record->token_probs);
    }

    CascadeOutcome out;
    out.qid = qid;
    out.exit_stage = exit;
    out.prediction = exit_record->prediction;
    out.confidence_at_exit = exit_confidence;
    out.path = EscalationPath::for_exit(exit, passages);
    out.cost = instance_cost(policy.cost, out.path);
    out.correct = resolve_correct(exit_record->prediction, exit_record->gold,
                                  first_record.gold);
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

LiveResult run_live(std::span<StageBackend* const> backends,
                    const CascadePolicy& policy,
                    std::span<const LiveQuestion> questions,
                    const LiveOptions& options) {
  validate_policy(policy);
  if (backends.size() != policy.stages.size()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("{} backends for {} stages", backends.size(),
                            policy.stages.size()));
  }
  const std::vector<double> thresholds = policy.thresholds();
  const std::vector<int> passages = policy.ob_passages();

  struct Slot {
    std::optional<CascadeOutcome> outcome;
    std::optional<LiveFailure> failure;
  };
  std::vector<Slot> slots(questions.size());

  internal::parallel_for(questions.size(), options.workers, [&](std::size_t qi) {
    const LiveQuestion& q = questions[qi];
    std::size_t stage = 0;
    try {
      BackendResponse response;
      double conf = 0.0;
      while (true) {
        BackendRequest request;
        request.question = q.question;
        request.max_new_tokens = options.max_new_tokens;
        const int wanted = policy.stages[stage].passages;
        const std::size_t n = std::min<std::size_t>(
            q.passages.size(), static_cast<std::size_t>(wanted));
        request.passages.assign(q.passages.begin(), q.passages.begin() + n);

        response = backends[stage]->predict(request);
        try {
          conf = confidence(policy.method, response.token_probs);
        } catch (const Error& e) {
          throw Error(ErrorCode::kMalformedBackendResponse, e.detail());
        }
        if (stage == thresholds.size() || !(conf < thresholds[stage])) break;
        ++stage;
      }
      CascadeOutcome out;
      out.qid = q.qid;
      out.exit_stage = stage;
      out.prediction = std::move(response.prediction);
      out.confidence_at_exit = conf;
      out.path = EscalationPath::for_exit(stage, passages);
      out.cost = instance_cost(policy.cost, out.path);
      out.correct = resolve_correct(out.prediction, q.gold, std::nullopt);
      slots[qi].outcome = std::move(out);
    } catch (const Error& e) {
      slots[qi].failure = LiveFailure{q.qid, stage, e.code(), e.what()};
    }
  });

  LiveResult result;
  for (Slot& s : slots) {
    if (s.outcome) result.outcomes.push_back(std::move(*s.outcome));
    if (s.failure) result.failures.push_back(std::move(*s.failure));
  }
  std::sort(result.outcomes.begin(), result.outcomes.end(),
            [](const auto& a, const auto& b) { return a.qid < b.qid; });
  std::sort(result.failures.begin(), result.failures.end(),
            [](const auto& a, const auto& b) { return a.qid < b.qid; });
  return result;
}

}  // namespace qcascade
