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

#include "qcascade/prediction.h"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "qcascade/error.h"

namespace qcascade {
namespace {

void check_probs(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidInput, "token_probs must be non-empty");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double p = values[i];
    // Written so that NaN fails too.
    if (!(p > 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("token_probs[{}] = {} is outside (0, 1]", i, p));
    }
  }
}

// Decodes UTF-8 into code points. Throws on malformed input.
std::vector<UChar32> decode_utf8(std::string_view text) {
  std::vector<UChar32> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t at = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("invalid UTF-8 at byte offset {}", at));
    }
    out.push_back(c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  U8_APPEND_UNSAFE(buf, n, c);
  out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

bool is_article(const std::string& word) {
  return word == "a" || word == "an" || word == "the";
}

}  // namespace

TokenProbs::TokenProbs(std::vector<double> values) : values_(std::move(values)) {
  check_probs(values_);
}

std::string_view method_name(ConfidenceMethod method) {
  switch (method) {
    case ConfidenceMethod::kProductAll: return "ppa";
    case ConfidenceMethod::kFirst: return "pf";
    case ConfidenceMethod::kFirstLast: return "pfl";
    case ConfidenceMethod::kAverage: return "pa";
  }
  return "?";
}

ConfidenceMethod parse_method(std::string_view name) {
  for (ConfidenceMethod m : kAllConfidenceMethods) {
    if (method_name(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidInput,
              fmt::format("unknown confidence method '{}'", name));
}

double confidence(ConfidenceMethod method, std::span<const double> probs) {
  check_probs(probs);
  switch (method) {
    case ConfidenceMethod::kProductAll: {
      // A single token is its own product; skip the exp/log round trip.
      if (probs.size() == 1) return probs.front();
      // Neumaier-compensated log sum; exp() turns absolute error in the sum
      // into relative error in the product.
      double log_sum = 0.0;
      double compensation = 0.0;
      for (double p : probs) {
        const double term = std::log(p);
        const double t = log_sum + term;
        if (std::abs(log_sum) >= std::abs(term)) {
          compensation += (log_sum - t) + term;
        } else {
          compensation += (term - t) + log_sum;
        }
        log_sum = t;
      }
      return std::exp(log_sum + compensation);
    }
    case ConfidenceMethod::kFirst:
      return probs.front();
    case ConfidenceMethod::kFirstLast:
      return (probs.front() + probs.back()) / 2.0;
    case ConfidenceMethod::kAverage: {
      double sum = 0.0;
      for (double p : probs) sum += p;
      return sum / static_cast<double>(probs.size());
    }
  }
  throw Error(ErrorCode::kInvalidInput, "unknown confidence method");
}

double confidence(ConfidenceMethod method, const TokenProbs& probs) {
  return confidence(method, probs.values());
}

std::string normalize_answer(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !is_article(current)) words.push_back(current);
    current.clear();
  };
  for (UChar32 c : decode_utf8(text)) {
    if (u_ispunct(c)) continue;
    if (u_isUWhiteSpace(c)) {
      flush();
      continue;
    }
    append_utf8(current, u_tolower(c));
  }
  flush();

  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

bool exact_match(std::string_view prediction,
                 std::span<const std::string> golds) {
  if (golds.empty()) {
    throw Error(ErrorCode::kInvalidInput, "exact_match needs at least one gold");
  }
  const std::string normalized = normalize_answer(prediction);
  for (const std::string& g : golds) {
    if (normalize_answer(g) == normalized) return true;
  }
  return false;
}

void PredictionLog::add(PredictionRecord record) {
  if (record.qid.empty()) {
    throw Error(ErrorCode::kInvalidInput, "record has an empty qid");
  }
  auto& by_qid = stages_[record.stage];
  auto [it, inserted] = by_qid.try_emplace(record.qid, record);
  if (!inserted) {
    throw Error(ErrorCode::kDuplicateRecord,
                fmt::format("qid '{}' stage '{}'", record.qid, record.stage));
  }
}

const PredictionRecord* PredictionLog::find(std::string_view stage,
                                            std::string_view qid) const {
  const StageRecords* records = this->stage(stage);
  if (records == nullptr) return nullptr;
  auto it = records->find(qid);
  return it == records->end() ? nullptr : &it->second;
}

const PredictionLog::StageRecords* PredictionLog::stage(
    std::string_view stage) const {
  auto it = stages_.find(stage);
  return it == stages_.end() ? nullptr : &it->second;
}

std::size_t PredictionLog::size() const {
  std::size_t n = 0;
  for (const auto& [name, records] : stages_) n += records.size();
  return n;
}

std::vector<std::string> PredictionLog::stage_names() const {
  std::vector<std::string> names;
  names.reserve(stages_.size());
  for (const auto& [name, records] : stages_) names.push_back(name);
  return names;
}

std::size_t utf8_length(std::string_view text) {
  return decode_utf8(text).size();
}

bool is_valid_utf8(std::string_view text) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) return false;
  }
  return true;
}

}  // namespace qcascade
