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


#include "qcascade/io.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "qcascade/error.h"
#include "qcascade/synth.h"
#include "test_util.h"

namespace qcascade {
namespace {

using ::qcascade::testing::cb_stage;
using ::qcascade::testing::make_record;
using ::qcascade::testing::ob_stage;

namespace fs = std::filesystem;

std::vector<double> probs_of(const PredictionRecord& r) {
  return {r.token_probs.values().begin(), r.token_probs.values().end()};
}

const Error& caught(auto&& fn) {
  static thread_local std::optional<Error> last;
  last.reset();
  try {
    fn();
  } catch (const Error& e) {
    last.emplace(e);
  }
  if (!last) {
    ADD_FAILURE() << "expected qcascade::Error";
    last.emplace(ErrorCode::kIoError, "none");
  }
  return *last;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qcascade_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  fs::path dir_;
};

constexpr const char* kLine1 =
    R"({"qid":"q1","stage":"cb","question":"who?","prediction":"Ann","token_probs":[0.9,0.8],"n_passages":0,"gold":["Ann"]})";
constexpr const char* kLine2 =
    R"({"qid":"q1","stage":"ob20","question":"who?","prediction":"Bob","token_probs":[0.7],"n_passages":20})";

TEST(ParseRecord, ReadsAllFields) {
  const PredictionRecord r = parse_record(kLine1);
  EXPECT_EQ("q1", r.qid);
  EXPECT_EQ("cb", r.stage);
  EXPECT_EQ("who?", r.question);
  EXPECT_EQ("Ann", r.prediction);
  EXPECT_EQ((std::vector<double>{0.9, 0.8}), probs_of(r));
  EXPECT_EQ(0, r.n_passages);
  EXPECT_EQ(std::vector<std::string>{"Ann"}, r.gold.value());
  EXPECT_FALSE(parse_record(kLine2).gold.has_value());
}

TEST(ParseRecord, SchemaViolationsNameTheField) {
  const auto& e = caught([] {
    parse_record(R"({"qid":"q","stage":"cb","question":"","prediction":"","n_passages":0})");
  });
  EXPECT_EQ(ErrorCode::kSchemaViolation, e.code());
  EXPECT_NE(std::string::npos, e.detail().find("token_probs"));

  const std::vector<std::pair<std::string, std::string>> cases = {
      {R"({"stage":"cb","question":"","prediction":"","token_probs":[0.5],"n_passages":0})", "qid"},
      {R"({"qid":"q","stage":"cb","question":"","prediction":"","token_probs":[],"n_passages":0})", "token_probs"},
      {R"({"qid":"q","stage":"cb","question":"","prediction":"","token_probs":[1.5],"n_passages":0})", "token_probs"},
      {R"({"qid":"q","stage":"cb","question":"","prediction":"","token_probs":["a"],"n_passages":0})", "token_probs"},
      {R"({"qid":"q","stage":"cb","question":"","prediction":"","token_probs":[0.5],"n_passages":1.5})", "n_passages"},
      {R"({"qid":"q","stage":"cb","question":"","prediction":"","token_probs":[0.5],"n_passages":-1})", "n_passages"},
      {R"({"qid":"q","stage":"cb","question":"","prediction":"","token_probs":[0.5],"n_passages":0,"gold":"x"})", "gold"},
      {R"({"qid":"q","stage":"","question":"","prediction":"","token_probs":[0.5],"n_passages":0})", "stage"},
      {R"({"qid":"q","stage":"cb","question":7,"prediction":"","token_probs":[0.5],"n_passages":0})", "question"},
  };
  for (const auto& [line, field] : cases) {
    const auto& err = caught([&] { parse_record(line); });
    EXPECT_EQ(ErrorCode::kSchemaViolation, err.code()) << line;
    EXPECT_NE(std::string::npos, err.detail().find("'" + field + "'")) << err.what();
  }
}

TEST(ParseRecord, MalformedLines) {
  EXPECT_EQ(ErrorCode::kMalformedLine, caught([] { parse_record("{not json"); }).code());
  EXPECT_EQ(ErrorCode::kMalformedLine, caught([] { parse_record("[1, 2]"); }).code());
  EXPECT_EQ(ErrorCode::kMalformedLine,
            caught([] { parse_record("{\"qid\":\"\xc3\x28\"}"); }).code());
}

TEST(ReadLogStream, ReportsLineNumbers) {
  std::istringstream in(std::string(kLine1) + "\n\n" +
                        R"({"qid":"q2","stage":"cb","question":"","prediction":"","n_passages":0})" +
                        "\n");
  PredictionLog logs;
  const auto& e = caught([&] { read_log_stream(in, "logs.jsonl", logs); });
  EXPECT_EQ(ErrorCode::kSchemaViolation, e.code());
  EXPECT_NE(std::string::npos, std::string(e.what()).find("logs.jsonl:3:"));
  EXPECT_NE(std::string::npos, e.detail().find("token_probs"));
}

TEST_F(TempDir, ParseLogsGroupsByStageAndCatchesDuplicates) {
  const fs::path a = write("a.jsonl", std::string(kLine1) + "\r\n" + kLine2 + "\n");
  const fs::path empty = write("empty.jsonl", "");
  const std::vector<fs::path> paths{a, empty};
  const PredictionLog logs = parse_logs(paths);
  EXPECT_EQ(2u, logs.size());
  EXPECT_EQ((std::vector<std::string>{"cb", "ob20"}), logs.stage_names());

  EXPECT_EQ(0u, parse_logs(std::vector<fs::path>{empty}).size());

  const fs::path dup = write("dup.jsonl", std::string(kLine1) + "\n");
  const auto& e = caught([&] { parse_logs(std::vector<fs::path>{a, dup}); });
  EXPECT_EQ(ErrorCode::kDuplicateRecord, e.code());
  EXPECT_NE(std::string::npos, std::string(e.what()).find("dup.jsonl:1:"));

  EXPECT_EQ(ErrorCode::kIoError,
            caught([&] { parse_logs(std::vector<fs::path>{dir_ / "missing"}); }).code());
}

TEST_F(TempDir, LogsRoundTrip) {
  SynthConfig c;
  c.n_questions = 50;
  c.seed = 3;
  c.stages = {{"cb", 0, 0.3}, {"ob5", 5, 0.6}};
  const PredictionLog logs = generate(c);
  const auto paths = write_log_dir(dir_ / "logs", logs);
  ASSERT_EQ(2u, paths.size());
  EXPECT_EQ("cb.jsonl", paths[0].filename());
  const PredictionLog back = parse_logs(paths);
  std::ostringstream a, b;
  write_log(a, logs);
  write_log(b, back);
  EXPECT_EQ(a.str(), b.str());
  for (const auto& [stage, records] : logs.stages()) {
    for (const auto& [qid, r] : records) {
      const PredictionRecord* other = back.find(stage, qid);
      ASSERT_NE(nullptr, other);
      EXPECT_EQ(probs_of(r), probs_of(*other));
      EXPECT_EQ(r.gold, other->gold);
    }
  }
}

TEST(RecordRoundTrip, RandomRecords) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> prob(1e-300, 1.0);
  const std::vector<std::string> texts{"", "plain", "quote \" and \\ slash", "ünïcødé ✓",
                                       "tab\tnew\nline"};
  std::uniform_int_distribution<std::size_t> pick(0, texts.size() - 1);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> probs(1 + i % 7);
    for (double& p : probs) p = prob(rng);
    PredictionRecord r = make_record("q" + std::to_string(i), "s" + std::to_string(i % 3),
                                     probs, i % 50, texts[pick(rng)], {texts[pick(rng)]},
                                     texts[pick(rng)] + "?");
    if (i % 4 == 0) r.gold.reset();
    const std::string once = serialize_record(r);
    const PredictionRecord back = parse_record(once);
    EXPECT_EQ(once, serialize_record(back));
    EXPECT_EQ(probs_of(r), probs_of(back));
    EXPECT_EQ(r.question, back.question);
  }
}

constexpr const char* kPolicy = R"({
  "method": "pfl",
  "cost": {"c_cb": 6.15e9, "c_ob_per_passage": 2.02e10, "mode": "encoder_reuse"},
  "stages": [{"name": "cb", "kind": "cb", "passages": 0, "threshold": 0.4},
             {"name": "ob20", "kind": "ob", "passages": 20, "threshold": 0.6},
             {"name": "ob100", "kind": "ob", "passages": 100, "threshold": null}]
})";

TEST(ParsePolicy, ReadsAndRoundTrips) {
  const CascadePolicy p = parse_policy(kPolicy, "policy.json");
  EXPECT_EQ(ConfidenceMethod::kFirstLast, p.method);
  EXPECT_EQ(CostModel(6.15e9, 2.02e10, CostMode::kEncoderReuse), p.cost);
  ASSERT_EQ(3u, p.stages.size());
  EXPECT_EQ((std::vector<double>{0.4, 0.6}), p.thresholds());
  EXPECT_FALSE(p.stages[2].threshold.has_value());
  const CascadePolicy back = parse_policy(serialize_policy(p), "again");
  EXPECT_EQ(p.stages, back.stages);
  EXPECT_EQ(p.cost, back.cost);
  EXPECT_EQ(p.method, back.method);
}

TEST(ParsePolicy, DefaultsModeToUpperBound) {
  const CascadePolicy p = parse_policy(
      R"({"method":"ppa","cost":{"c_cb":1,"c_ob_per_passage":1},
          "stages":[{"name":"cb","kind":"cb","passages":0}]})",
      "p");
  EXPECT_EQ(CostMode::kUpperBound, p.cost.mode());
  EXPECT_EQ(0u, p.iterations());
}

TEST(ParsePolicy, ErrorsCarrySourceAndCode) {
  const auto& bad_order = caught([] {
    parse_policy(R"({"method":"ppa","cost":{"c_cb":1,"c_ob_per_passage":1},
        "stages":[{"name":"cb","kind":"cb","passages":0,"threshold":0.5},
                  {"name":"a","kind":"ob","passages":20,"threshold":0.5},
                  {"name":"b","kind":"ob","passages":10}]})",
                 "bad.json");
  });
  EXPECT_EQ(ErrorCode::kNonIncreasingPassages, bad_order.code());
  EXPECT_EQ(0u, std::string(bad_order.what()).find("NonIncreasingPassages: bad.json: "));

  EXPECT_EQ(ErrorCode::kMalformedLine, caught([] { parse_policy("{", "x"); }).code());
  EXPECT_EQ(ErrorCode::kSchemaViolation,
            caught([] { parse_policy(R"({"method":"ppa","stages":[]})", "x"); }).code());
  EXPECT_EQ(ErrorCode::kInvalidInput, caught([] {
              parse_policy(R"({"method":"zz","cost":{"c_cb":1,"c_ob_per_passage":1},"stages":[]})",
                           "x");
            }).code());
}

TEST(CheckLogsAgainstPolicy, FindsMismatches) {
  CascadePolicy p;
  p.stages = {cb_stage("cb", 0.5), ob_stage("ob20", 20)};
  PredictionLog logs;
  logs.add(make_record("a", "cb", {0.5}, 0));
  logs.add(make_record("a", "ob20", {0.5}, 20));
  EXPECT_TRUE(check_logs_against_policy(logs, p).empty());
  logs.add(make_record("b", "ob20", {0.5}, 10));
  logs.add(make_record("b", "ob50", {0.5}, 50));
  const auto problems = check_logs_against_policy(logs, p);
  ASSERT_EQ(2u, problems.size());
  EXPECT_NE(std::string::npos, problems[0].find("n_passages 10"));
  EXPECT_NE(std::string::npos, problems[1].find("'ob50'"));

  PredictionLog no_cb;
  no_cb.add(make_record("a", "ob20", {0.5}, 20));
  EXPECT_EQ(1u, check_logs_against_policy(no_cb, p).size());
}

TEST(SynthConfigFile, ParsesAndValidates) {
  const SynthConfig c = parse_synth_config(
      R"({"n_questions": 2000, "seed": 7, "difficulty_sharpness": 6, "calibration": 0.8,
          "answer_token_count": 3,
          "stages": [{"name": "cb", "passages": 0, "capability": 0.45},
                     {"name": "ob20", "passages": 20, "capability": 0.75}]})",
      "synth.json");
  EXPECT_EQ(2000u, c.n_questions);
  EXPECT_EQ(7u, c.seed);
  EXPECT_EQ(0.75, c.stages[1].capability);
  EXPECT_EQ(ErrorCode::kInvalidInput, caught([] {
              parse_synth_config(
                  R"({"n_questions": 1, "seed": 7, "difficulty_sharpness": 6,
                      "calibration": 0.8, "answer_token_count": 3,
                      "stages": [{"name": "cb", "passages": 0, "capability": 0.9},
                                 {"name": "ob", "passages": 5, "capability": 0.1}]})",
                  "s");
            }).code());
}

TEST_F(TempDir, LoadQuestions) {
  const fs::path p = write(
      "q.jsonl",
      R"({"qid":"a","question":"who?","passages":["p1","p2"],"gold":["Ann"]})"
      "\n"
      R"({"qid":"b","question":"what?"})"
      "\n");
  const auto qs = load_questions(p);
  ASSERT_EQ(2u, qs.size());
  EXPECT_EQ(2u, qs[0].passages.size());
  EXPECT_FALSE(qs[1].gold.has_value());
  const fs::path bad = write("bad.jsonl", "\n{\"qid\":\"a\"}\n");
  const auto& e = caught([&] { load_questions(bad); });
  EXPECT_EQ(ErrorCode::kSchemaViolation, e.code());
  EXPECT_NE(std::string::npos, std::string(e.what()).find("bad.jsonl:2:"));
}

TEST(CurveCsv, WritesAndReads) {
  const AccuracyCostCurve c({CurvePoint{6.15e9, 1.0 / 3.0, {0.0}},
                             CurvePoint{2.0815e10, 0.5, {0.25, 1.0000000000000002}},
                             CurvePoint{3e10, 0.75, {}}});
  std::ostringstream out;
  write_curve_csv(out, c);
  EXPECT_EQ(
      "cost_flops,accuracy,thresholds\n"
      "6150000000,0.333333,0\n"
      "20815000000,0.500000,0.25;1.0000000000000002\n"
      "30000000000,0.750000,\n",
      out.str());
  std::istringstream in(out.str());
  const AccuracyCostCurve back = read_curve_csv(in, "c.csv");
  ASSERT_EQ(3u, back.size());
  EXPECT_EQ(c.points()[1].thresholds, back.points()[1].thresholds);
  EXPECT_EQ(6.15e9, back.front().cost);
  EXPECT_DOUBLE_EQ(0.333333, back.front().accuracy);
}

TEST(CurveCsv, RejectsBadInput) {
  std::istringstream no_header("1,0.5,\n");
  EXPECT_EQ(ErrorCode::kMalformedLine, caught([&] { read_curve_csv(no_header, "c"); }).code());
  std::istringstream bad_row("cost_flops,accuracy,thresholds\n1,abc,\n");
  const auto& e = caught([&] { read_curve_csv(bad_row, "c.csv"); });
  EXPECT_EQ(ErrorCode::kMalformedLine, e.code());
  EXPECT_NE(std::string::npos, std::string(e.what()).find("c.csv:2:"));
  std::istringstream empty("");
  EXPECT_EQ(ErrorCode::kMalformedLine, caught([&] { read_curve_csv(empty, "c"); }).code());
}

TEST(SerializeOutcome, Fields) {
  CascadePolicy p;
  p.stages = {cb_stage("cb", 0.5), ob_stage("ob20", 20)};
  CascadeOutcome o;
  o.qid = "q";
  o.exit_stage = 1;
  o.prediction = "x";
  o.confidence_at_exit = 0.5;
  o.path = EscalationPath::for_exit(1, {20});
  o.cost = 21.0;
  EXPECT_EQ(
      R"({"qid":"q","exit_stage":1,"exit_stage_name":"ob20","prediction":"x","confidence":0.5,"cost_flops":21.0,"used":[1],"correct":null})",
      serialize_outcome(o, p));
}

}  // namespace
}  // namespace qcascade
