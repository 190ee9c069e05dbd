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

// Per-stage reader predictions, the token-probability confidence estimators
// and exact-match scoring.

#ifndef QCASCADE_PREDICTION_H_
#define QCASCADE_PREDICTION_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qcascade {

// Max-softmax probability of each generated answer token, in generation
// order. Always non-empty with every value in (0, 1].
class TokenProbs {
 public:
  // Throws Error(kInvalidInput) if `values` is empty or any value is
  // outside (0, 1] (NaN included).
  explicit TokenProbs(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double first() const { return values_.front(); }
  double last() const { return values_.back(); }

  bool operator==(const TokenProbs&) const = default;

 private:
  std::vector<double> values_;
};

enum class ConfidenceMethod {
  kProductAll,     // P_PA: product of all token probabilities.
  kFirst,          // P_F: first token probability.
  kFirstLast,      // P_FL: mean of first and last token probabilities.
  kAverage,        // P_A: mean of all token probabilities.
};

inline constexpr ConfidenceMethod kAllConfidenceMethods[] = {
    ConfidenceMethod::kProductAll, ConfidenceMethod::kFirst,
    ConfidenceMethod::kFirstLast, ConfidenceMethod::kAverage};

// Short lowercase names used in configs and on the command line:
// "ppa", "pf", "pfl", "pa".
std::string_view method_name(ConfidenceMethod method);
ConfidenceMethod parse_method(std::string_view name);

// Confidence score in (0, 1]. P_PA is accumulated as a sum of logs and
// exponentiated once, so long generations do not underflow early.
double confidence(ConfidenceMethod method, const TokenProbs& probs);

// Same checks as TokenProbs, without building one.
double confidence(ConfidenceMethod method, std::span<const double> probs);

// Lowercase, strip Unicode punctuation, drop the whole words "a", "an",
// "the", collapse whitespace. Input must be valid UTF-8; invalid sequences
// raise Error(kInvalidInput).
std::string normalize_answer(std::string_view text);

// True iff the normalized prediction equals some normalized gold answer.
// Throws Error(kInvalidInput) on an empty gold list.
bool exact_match(std::string_view prediction,
                 std::span<const std::string> golds);

struct PredictionRecord {
  std::string qid;
  std::string stage;
  std::string question;
  std::string prediction;
  TokenProbs token_probs;
  int n_passages = 0;  // 0 for closed-book stages.
  std::optional<std::vector<std::string>> gold;

  bool operator==(const PredictionRecord&) const = default;
};

// Records for every stage of a run, grouped by stage id and keyed by qid.
// Iteration order is lexicographic in both stage and qid.
class PredictionLog {
 public:
  using StageRecords = std::map<std::string, PredictionRecord, std::less<>>;

  // Throws Error(kDuplicateRecord) if (qid, stage) is already present and
  // Error(kInvalidInput) on an empty qid.
  void add(PredictionRecord record);

  const PredictionRecord* find(std::string_view stage,
                               std::string_view qid) const;
  const StageRecords* stage(std::string_view stage) const;

  bool empty() const { return stages_.empty(); }
  std::size_t size() const;
  std::vector<std::string> stage_names() const;
  const std::map<std::string, StageRecords, std::less<>>& stages() const {
    return stages_;
  }

 private:
  std::map<std::string, StageRecords, std::less<>> stages_;
};

// Number of Unicode code points in a UTF-8 string. Throws on invalid UTF-8.
std::size_t utf8_length(std::string_view text);

// True iff `text` is well-formed UTF-8.
bool is_valid_utf8(std::string_view text);

}  // namespace qcascade

#endif  // QCASCADE_PREDICTION_H_
