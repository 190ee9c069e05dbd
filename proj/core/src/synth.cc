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

#include "qcascade/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "parallel.h"
#include "qcascade/error.h"

namespace qcascade {
namespace {

constexpr int kMaxFillerWords = 16;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

boost::random::mt19937_64 question_rng(std::uint64_t seed, std::string_view qid) {
  const std::uint64_t h = fnv1a(qid);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return boost::random::mt19937_64(seq);
}

std::vector<PredictionRecord> generate_question(const SynthConfig& config,
                                                std::size_t index) {
  const std::string qid = synth_qid(index);
  auto rng = question_rng(config.seed, qid);
  boost::random::uniform_01<double> unit;
  boost::random::uniform_int_distribution<int> filler(0, kMaxFillerWords);
  const double rho = config.calibration;
  boost::random::beta_distribution<double> correct_score(2.0 + 8.0 * rho, 2.0);
  boost::random::beta_distribution<double> wrong_score(2.0, 2.0 + 8.0 * rho);

  const double difficulty = unit(rng);
  std::string question = fmt::format("synthetic question {}", qid);
  for (int w = filler(rng); w > 0; --w) question += " lorem";
  const std::string gold = fmt::format("answer {}", qid);

  std::vector<PredictionRecord> records;
  for (const SynthStage& stage : config.stages) {
    const double p_correct =
        1.0 / (1.0 + std::exp(-config.sharpness * (stage.capability - difficulty)));
    boost::random::bernoulli_distribution<double> is_correct(p_correct);
    const bool correct = is_correct(rng);
    double score = correct ? correct_score(rng) : wrong_score(rng);
    score = std::clamp(score, std::numeric_limits<double>::min(), 1.0);

    const double per_token = std::pow(score, 1.0 / config.answer_tokens);
    records.push_back(PredictionRecord{
        .qid = qid,
        .stage = stage.name,
        .question = question,
        .prediction = correct ? gold : fmt::format("wrong {} {}", stage.name, qid),
        .token_probs = TokenProbs(std::vector<double>(
            static_cast<std::size_t>(config.answer_tokens), per_token)),
        .n_passages = stage.passages,
        .gold = std::vector<std::string>{gold},
    });
  }
  return records;
}

}  // namespace

void validate_synth_config(const SynthConfig& config) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidInput, what);
  };
  if (config.stages.empty()) fail("synth config needs at least one stage");
  if (!(config.sharpness > 0.0) || !std::isfinite(config.sharpness)) {
    fail(fmt::format("difficulty_sharpness must be > 0, got {}", config.sharpness));
  }
  if (!(config.calibration >= 0.0 && config.calibration <= 1.0)) {
    fail(fmt::format("calibration must be in [0, 1], got {}", config.calibration));
  }
  if (config.answer_tokens < 1) {
    fail(fmt::format("answer_token_count must be >= 1, got {}", config.answer_tokens));
  }
  for (std::size_t k = 0; k < config.stages.size(); ++k) {
    const SynthStage& s = config.stages[k];
    if (s.name.empty()) fail(fmt::format("stage {} has no name", k));
    for (std::size_t j = 0; j < k; ++j) {
      if (config.stages[j].name == s.name) {
        fail(fmt::format("duplicate stage name '{}'", s.name));
      }
    }
    if (s.passages < 0) {
      fail(fmt::format("stage '{}' has negative passages", s.name));
    }
    if (!(s.capability >= 0.0 && s.capability <= 1.0)) {
      fail(fmt::format("stage '{}' capability {} is outside [0, 1]", s.name,
                       s.capability));
    }
    if (k > 0 && s.capability < config.stages[k - 1].capability) {
      fail(fmt::format("stage '{}' capability decreases", s.name));
    }
  }
}

std::string synth_qid(std::size_t index) { return fmt::format("q{:06d}", index); }

PredictionLog generate(const SynthConfig& config, std::size_t workers) {
  validate_synth_config(config);
  std::vector<std::vector<PredictionRecord>> per_question(config.n_questions);
  internal::parallel_for(config.n_questions, workers, [&](std::size_t i) {
    per_question[i] = generate_question(config, i);
  });
  PredictionLog logs;
  for (auto& records : per_question) {
    for (auto& r : records) logs.add(std::move(r));
  }
  return logs;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorCode::kInvalidInput, "pearson needs equal non-empty inputs");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

CalibrationReport calibration_report(const PredictionLog& logs,
                                     ConfidenceMethod method) {
  if (logs.empty()) {
    throw Error(ErrorCode::kInvalidInput, "calibration report of empty logs");
  }
  CalibrationReport report;
  report.method = method;
  for (const auto& [stage, records] : logs.stages()) {
    std::vector<double> conf;
    std::vector<double> correct;
    double sum_correct = 0.0, sum_wrong = 0.0;
    std::size_t n_correct = 0;
    for (const auto& [qid, r] : records) {
      if (!r.gold.has_value() || r.gold->empty()) {
        throw Error(ErrorCode::kInvalidInput,
                    fmt::format("qid '{}' stage '{}' has no gold answers", qid, stage));
      }
      const double c = confidence(method, r.token_probs);
      const bool ok = exact_match(r.prediction, *r.gold);
      conf.push_back(c);
      correct.push_back(ok ? 1.0 : 0.0);
      (ok ? sum_correct : sum_wrong) += c;
      n_correct += ok ? 1 : 0;
    }
    StageCalibration s;
    s.stage = stage;
    s.records = records.size();
    s.accuracy = static_cast<double>(n_correct) / static_cast<double>(records.size());
    s.correlation = pearson(conf, correct);
    if (n_correct > 0) {
      s.mean_confidence_correct = sum_correct / static_cast<double>(n_correct);
    }
    if (n_correct < records.size()) {
      s.mean_confidence_incorrect =
          sum_wrong / static_cast<double>(records.size() - n_correct);
    }
    report.stages.push_back(std::move(s));
  }
  return report;
}

std::string format_report(const CalibrationReport& report) {
  auto opt = [](const std::optional<double>& v) {
    return v.has_value() ? fmt::format("{:.6f}", *v) : std::string("n/a");
  };
  std::string out = fmt::format("calibration report (method {})\n",
                                method_name(report.method));
  out += fmt::format("{:<16} {:>8} {:>10} {:>12} {:>14} {:>14}\n", "stage", "records",
                     "accuracy", "correlation", "conf_correct", "conf_wrong");
  for (const StageCalibration& s : report.stages) {
    out += fmt::format("{:<16} {:>8} {:>10.6f} {:>12.6f} {:>14} {:>14}\n", s.stage,
                       s.records, s.accuracy, s.correlation,
                       opt(s.mean_confidence_correct), opt(s.mean_confidence_incorrect));
  }
  return out;
}

}  // namespace qcascade
