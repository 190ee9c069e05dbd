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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "qcascade/error.h"
#include "qcascade/io.h"
#include "test_util.h"

namespace qcascade {
namespace {

using ::qcascade::testing::make_record;

SynthConfig config(std::vector<double> capabilities, double rho, std::size_t n = 2000,
                   std::uint64_t seed = 7) {
  SynthConfig c;
  c.n_questions = n;
  c.seed = seed;
  c.calibration = rho;
  for (std::size_t k = 0; k < capabilities.size(); ++k) {
    c.stages.push_back(SynthStage{k == 0 ? "cb" : "ob" + std::to_string(10 * k),
                                  static_cast<int>(10 * k), capabilities[k]});
  }
  return c;
}

std::string dump(const PredictionLog& logs) {
  std::ostringstream out;
  write_log(out, logs);
  return out.str();
}

TEST(Generate, DeterministicAndIndependentOfWorkers) {
  const SynthConfig c = config({0.4, 0.7}, 0.8, 300);
  const std::string once = dump(generate(c, 1));
  EXPECT_EQ(once, dump(generate(c, 1)));
  EXPECT_EQ(once, dump(generate(c, 4)));
  SynthConfig other = c;
  other.seed = 8;
  EXPECT_NE(once, dump(generate(other)));
}

TEST(Generate, PrefixStableAcrossQuestionCounts) {
  // Per-question substreams: question i is the same whatever n is.
  const PredictionLog small = generate(config({0.5}, 0.5, 10));
  const PredictionLog big = generate(config({0.5}, 0.5, 50));
  for (const auto& [qid, r] : *small.stage("cb")) {
    const PredictionRecord* other = big.find("cb", qid);
    ASSERT_NE(nullptr, other);
    EXPECT_EQ(serialize_record(r), serialize_record(*other));
  }
}

TEST(Generate, ZeroQuestionsGiveEmptyLogs) {
  const PredictionLog logs = generate(config({0.3, 0.6}, 0.5, 0));
  EXPECT_EQ(0u, logs.size());
}

TEST(Generate, RecordShape) {
  SynthConfig c = config({0.3, 0.6}, 0.5, 40);
  c.answer_tokens = 4;
  const PredictionLog logs = generate(c);
  EXPECT_EQ(80u, logs.size());
  const PredictionRecord* r = logs.find("ob10", synth_qid(7));
  ASSERT_NE(nullptr, r);
  EXPECT_EQ("q000007", r->qid);
  EXPECT_EQ(10, r->n_passages);
  EXPECT_EQ(4u, r->token_probs.values().size());
  ASSERT_TRUE(r->gold.has_value());
  EXPECT_EQ(r->question, logs.find("cb", synth_qid(7))->question);
}

TEST(Generate, ProductOfTokensRecoversTheScore) {
  SynthConfig c = config({0.2, 0.5, 0.9}, 0.7, 500);
  c.answer_tokens = 5;
  const PredictionLog logs = generate(c);
  for (const auto& [stage, records] : logs.stages()) {
    for (const auto& [qid, r] : records) {
      const auto& v = r.token_probs.values();
      for (double p : v) EXPECT_EQ(v.front(), p);
      const double score = std::pow(v.front(), static_cast<double>(v.size()));
      EXPECT_NEAR(score, confidence(ConfidenceMethod::kProductAll, r.token_probs), 1e-9);
    }
  }
}

TEST(Generate, CalibratedConfidenceCorrelatesWithCorrectness) {
  const auto report = calibration_report(generate(config({0.5}, 0.9)),
                                         ConfidenceMethod::kProductAll);
  ASSERT_EQ(1u, report.stages.size());
  EXPECT_GT(report.stages[0].correlation, 0.5);
}

TEST(Generate, UncalibratedConfidenceIsUninformative) {
  const auto report = calibration_report(generate(config({0.5}, 0.0)),
                                         ConfidenceMethod::kProductAll);
  EXPECT_LT(std::abs(report.stages[0].correlation), 0.1);
}

TEST(Generate, CapabilityOrdersStageAccuracy) {
  SynthConfig c = config({0.3, 0.6, 0.8}, 0.8);
  c.sharpness = 6.0;
  const auto report = calibration_report(generate(c), ConfidenceMethod::kProductAll);
  ASSERT_EQ(3u, report.stages.size());
  // Stages sort by name: cb, ob10, ob20.
  EXPECT_LT(report.stages[0].accuracy, report.stages[1].accuracy);
  EXPECT_LT(report.stages[1].accuracy, report.stages[2].accuracy);
}

TEST(Generate, FullCalibrationSeparatesMeans) {
  const auto report = calibration_report(generate(config({0.5}, 1.0, 500)),
                                         ConfidenceMethod::kProductAll);
  EXPECT_GT(*report.stages[0].mean_confidence_correct,
            *report.stages[0].mean_confidence_incorrect);
}

TEST(Generate, EqualCapabilitiesStayWithinSlack) {
  const auto report = calibration_report(generate(config({0.6, 0.6}, 0.5)),
                                         ConfidenceMethod::kProductAll);
  EXPECT_GE(report.stages[1].accuracy, report.stages[0].accuracy - 0.03);
}

TEST(ValidateSynthConfig, RejectsBadFields) {
  auto rejects = [](SynthConfig c) {
    try {
      validate_synth_config(c);
    } catch (const Error& e) {
      return e.code() == ErrorCode::kInvalidInput;
    }
    return false;
  };
  EXPECT_FALSE(rejects(config({0.3, 0.6}, 0.5)));
  EXPECT_TRUE(rejects(config({0.6, 0.3}, 0.5)));
  EXPECT_TRUE(rejects(config({0.3}, 1.5)));
  EXPECT_TRUE(rejects(config({1.3}, 0.5)));
  EXPECT_TRUE(rejects(config({}, 0.5)));
  SynthConfig c = config({0.3}, 0.5);
  c.sharpness = 0.0;
  EXPECT_TRUE(rejects(c));
  c = config({0.3}, 0.5);
  c.answer_tokens = 0;
  EXPECT_TRUE(rejects(c));
}

TEST(CalibrationReport, ZeroVarianceAndPerfectSeparation) {
  PredictionLog flat;
  flat.add(make_record("a", "cb", {0.5}, 0, "x", {"x"}));
  flat.add(make_record("b", "cb", {0.5}, 0, "y", {"x"}));
  EXPECT_EQ(0.0, calibration_report(flat, ConfidenceMethod::kProductAll).stages[0].correlation);

  PredictionLog sharp;
  sharp.add(make_record("a", "cb", {1.0}, 0, "x", {"x"}));
  sharp.add(make_record("b", "cb", {0.3}, 0, "y", {"x"}));
  sharp.add(make_record("c", "cb", {0.3}, 0, "z", {"x"}));
  EXPECT_NEAR(1.0, calibration_report(sharp, ConfidenceMethod::kProductAll).stages[0].correlation,
              1e-12);

  EXPECT_THROW(calibration_report(PredictionLog{}, ConfidenceMethod::kProductAll), Error);
  PredictionLog no_gold;
  PredictionRecord r = make_record("a", "cb", {0.5}, 0);
  r.gold.reset();
  no_gold.add(r);
  EXPECT_THROW(calibration_report(no_gold, ConfidenceMethod::kProductAll), Error);
}

TEST(CalibrationReport, FormatsMissingMeans) {
  PredictionLog logs;
  logs.add(make_record("a", "cb", {0.5}, 0, "x", {"x"}));
  const std::string text =
      format_report(calibration_report(logs, ConfidenceMethod::kFirst));
  EXPECT_NE(std::string::npos, text.find("method pf"));
  EXPECT_NE(std::string::npos, text.find("n/a"));
}

TEST(Pearson, Basics) {
  EXPECT_NEAR(-1.0, pearson({1, 2, 3}, {3, 2, 1}), 1e-12);
  EXPECT_EQ(0.0, pearson({1, 1, 1}, {3, 2, 1}));
  EXPECT_THROW(pearson({1}, {1, 2}), Error);
}

}  // namespace
}  // namespace qcascade
