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

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "qcascade/error.h"

namespace qcascade {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void schema_error(std::string_view field, std::string_view what) {
  throw Error(ErrorCode::kSchemaViolation,
              fmt::format("field '{}': {}", field, what));
}

const json& require(const json& obj, std::string_view field) {
  auto it = obj.find(field);
  if (it == obj.end()) schema_error(field, "missing");
  return *it;
}

std::string require_string(const json& obj, std::string_view field,
                           bool non_empty = false) {
  const json& v = require(obj, field);
  if (!v.is_string()) schema_error(field, "expected a string");
  std::string s = v.get<std::string>();
  if (non_empty && s.empty()) schema_error(field, "must be non-empty");
  return s;
}

double require_number(const json& obj, std::string_view field) {
  const json& v = require(obj, field);
  if (!v.is_number()) schema_error(field, "expected a number");
  return v.get<double>();
}

long long require_integer(const json& obj, std::string_view field) {
  const json& v = require(obj, field);
  if (!v.is_number_integer()) schema_error(field, "expected an integer");
  return v.get<long long>();
}

std::vector<std::string> string_list(const json& v, std::string_view field) {
  if (!v.is_array()) schema_error(field, "expected an array of strings");
  std::vector<std::string> out;
  for (const json& e : v) {
    if (!e.is_string()) schema_error(field, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

json parse_json_text(std::string_view text, const std::string& source) {
  if (!is_valid_utf8(text)) {
    throw Error(ErrorCode::kMalformedLine, fmt::format("{}: not valid UTF-8", source));
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedLine, fmt::format("{}: {}", source, e.what()));
  }
}

// Re-raises `e` with a location prefix.
[[noreturn]] void rethrow_at(const Error& e, std::string_view where) {
  throw Error(e.code(), fmt::format("{}: {}", where, e.detail()));
}

bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    if (at == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, at - start));
    start = at + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, fmt::format("{}: cannot open", path.string()));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

PredictionRecord parse_record(std::string_view line) {
  if (!is_valid_utf8(line)) {
    throw Error(ErrorCode::kMalformedLine, "not valid UTF-8");
  }
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedLine, e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedLine, "expected a JSON object");
  }

  std::string qid = require_string(j, "qid", true);
  std::string stage = require_string(j, "stage", true);
  std::string question = require_string(j, "question");
  std::string prediction = require_string(j, "prediction");

  const json& probs = require(j, "token_probs");
  if (!probs.is_array() || probs.empty()) {
    schema_error("token_probs", "expected a non-empty array of numbers");
  }
  std::vector<double> values;
  for (const json& p : probs) {
    if (!p.is_number()) schema_error("token_probs", "expected numbers");
    values.push_back(p.get<double>());
  }
  std::optional<TokenProbs> token_probs;
  try {
    token_probs.emplace(std::move(values));
  } catch (const Error& e) {
    schema_error("token_probs", e.detail());
  }

  const long long n_passages = require_integer(j, "n_passages");
  if (n_passages < 0 || n_passages > std::numeric_limits<int>::max()) {
    schema_error("n_passages", "must be a non-negative integer");
  }

  std::optional<std::vector<std::string>> gold;
  if (auto it = j.find("gold"); it != j.end() && !it->is_null()) {
    gold = string_list(*it, "gold");
    if (gold->empty()) schema_error("gold", "must be non-empty when present");
  }

  return PredictionRecord{std::move(qid),        std::move(stage),
                          std::move(question),   std::move(prediction),
                          std::move(*token_probs), static_cast<int>(n_passages),
                          std::move(gold)};
}

std::string serialize_record(const PredictionRecord& record) {
  ordered_json j;
  j["qid"] = record.qid;
  j["stage"] = record.stage;
  j["question"] = record.question;
  j["prediction"] = record.prediction;
  j["token_probs"] = std::vector<double>(record.token_probs.values().begin(),
                                         record.token_probs.values().end());
  j["n_passages"] = record.n_passages;
  if (record.gold.has_value()) j["gold"] = *record.gold;
  return j.dump();
}

void read_log_stream(std::istream& in, const std::string& source,
                     PredictionLog& logs) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = strip_cr(line);
    if (is_blank(text)) continue;
    try {
      logs.add(parse_record(text));
    } catch (const Error& e) {
      rethrow_at(e, fmt::format("{}:{}", source, line_no));
    }
  }
}

PredictionLog parse_logs(std::span<const std::filesystem::path> paths) {
  PredictionLog logs;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::kIoError, fmt::format("{}: cannot open", path.string()));
    }
    read_log_stream(in, path.string(), logs);
  }
  return logs;
}

void write_log(std::ostream& out, const PredictionLog& logs) {
  for (const auto& [stage, records] : logs.stages()) {
    for (const auto& [qid, record] : records) out << serialize_record(record) << '\n';
  }
}

std::vector<std::filesystem::path> write_log_dir(const std::filesystem::path& dir,
                                                 const PredictionLog& logs) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [stage, records] : logs.stages()) {
    const auto path = dir / (stage + ".jsonl");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoError, fmt::format("{}: cannot write", path.string()));
    }
    for (const auto& [qid, record] : records) out << serialize_record(record) << '\n';
    written.push_back(path);
  }
  return written;
}

CascadePolicy parse_policy(std::string_view json_text, const std::string& source) {
  const json j = parse_json_text(json_text, source);
  try {
    if (!j.is_object()) {
      throw Error(ErrorCode::kMalformedLine, "policy must be a JSON object");
    }
    const ConfidenceMethod method = parse_method(require_string(j, "method"));

    const json& cost = require(j, "cost");
    if (!cost.is_object()) schema_error("cost", "expected an object");
    CostMode mode = CostMode::kUpperBound;
    if (auto it = cost.find("mode"); it != cost.end()) {
      if (!it->is_string()) schema_error("cost.mode", "expected a string");
      mode = parse_cost_mode(it->get<std::string>());
    }
    const CostModel model(require_number(cost, "c_cb"),
                          require_number(cost, "c_ob_per_passage"), mode);

    const json& stages = require(j, "stages");
    if (!stages.is_array()) schema_error("stages", "expected an array");
    std::vector<StageSpec> specs;
    for (const json& s : stages) {
      if (!s.is_object()) schema_error("stages", "expected objects");
      StageSpec spec;
      spec.name = require_string(s, "name", true);
      spec.kind = parse_stage_kind(require_string(s, "kind"));
      const long long passages = require_integer(s, "passages");
      if (passages < 0 || passages > std::numeric_limits<int>::max()) {
        schema_error("passages", "must be a non-negative integer");
      }
      spec.passages = static_cast<int>(passages);
      if (auto it = s.find("threshold"); it != s.end() && !it->is_null()) {
        if (!it->is_number()) schema_error("threshold", "expected a number");
        spec.threshold = it->get<double>();
      }
      specs.push_back(std::move(spec));
    }

    CascadePolicy policy{std::move(specs), method, model};
    validate_policy(policy);
    return policy;
  } catch (const Error& e) {
    rethrow_at(e, source);
  }
}

CascadePolicy load_policy(const std::filesystem::path& path) {
  return parse_policy(read_file(path), path.string());
}

std::string serialize_policy(const CascadePolicy& policy) {
  ordered_json j;
  j["method"] = method_name(policy.method);
  j["cost"] = {{"c_cb", policy.cost.c_cb()},
               {"c_ob_per_passage", policy.cost.c_ob()},
               {"mode", cost_mode_name(policy.cost.mode())}};
  j["stages"] = ordered_json::array();
  for (const StageSpec& s : policy.stages) {
    ordered_json e;
    e["name"] = s.name;
    e["kind"] = stage_kind_name(s.kind);
    e["passages"] = s.passages;
    if (s.threshold.has_value()) e["threshold"] = *s.threshold;
    j["stages"].push_back(std::move(e));
  }
  return j.dump(2);
}

std::vector<std::string> check_logs_against_policy(const PredictionLog& logs,
                                                   const CascadePolicy& policy) {
  std::vector<std::string> problems;
  if (!logs.empty() && logs.stage(policy.stages.front().name) == nullptr) {
    problems.push_back(fmt::format("no records for stage 0 ('{}')",
                                   policy.stages.front().name));
  }
  for (const auto& [stage, records] : logs.stages()) {
    const StageSpec* spec = nullptr;
    for (const StageSpec& s : policy.stages) {
      if (s.name == stage) spec = &s;
    }
    if (spec == nullptr) {
      problems.push_back(fmt::format("stage '{}' is not in the policy", stage));
      continue;
    }
    for (const auto& [qid, r] : records) {
      if (r.n_passages != spec->passages) {
        problems.push_back(fmt::format(
            "qid '{}' stage '{}' has n_passages {} but the policy reads {}", qid,
            stage, r.n_passages, spec->passages));
      }
    }
  }
  return problems;
}

SynthConfig parse_synth_config(std::string_view json_text, const std::string& source) {
  const json j = parse_json_text(json_text, source);
  try {
    if (!j.is_object()) {
      throw Error(ErrorCode::kMalformedLine, "synth config must be a JSON object");
    }
    SynthConfig c;
    const long long n = require_integer(j, "n_questions");
    if (n < 0) schema_error("n_questions", "must be >= 0");
    c.n_questions = static_cast<std::size_t>(n);
    const long long seed = require_integer(j, "seed");
    c.seed = static_cast<std::uint64_t>(seed);
    c.sharpness = require_number(j, "difficulty_sharpness");
    c.calibration = require_number(j, "calibration");
    const long long tokens = require_integer(j, "answer_token_count");
    if (tokens < 1 || tokens > 4096) schema_error("answer_token_count", "must be in [1, 4096]");
    c.answer_tokens = static_cast<int>(tokens);
    const json& stages = require(j, "stages");
    if (!stages.is_array()) schema_error("stages", "expected an array");
    for (const json& s : stages) {
      if (!s.is_object()) schema_error("stages", "expected objects");
      SynthStage stage;
      stage.name = require_string(s, "name", true);
      const long long passages = require_integer(s, "passages");
      if (passages < 0 || passages > std::numeric_limits<int>::max()) {
        schema_error("passages", "must be a non-negative integer");
      }
      stage.passages = static_cast<int>(passages);
      stage.capability = require_number(s, "capability");
      c.stages.push_back(std::move(stage));
    }
    validate_synth_config(c);
    return c;
  } catch (const Error& e) {
    rethrow_at(e, source);
  }
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  return parse_synth_config(read_file(path), path.string());
}

std::vector<LiveQuestion> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, fmt::format("{}: cannot open", path.string()));
  }
  std::vector<LiveQuestion> questions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = strip_cr(line);
    if (is_blank(text)) continue;
    const std::string where = fmt::format("{}:{}", path.string(), line_no);
    const json j = parse_json_text(text, where);
    try {
      if (!j.is_object()) throw Error(ErrorCode::kMalformedLine, "expected a JSON object");
      LiveQuestion q;
      q.qid = require_string(j, "qid", true);
      q.question = require_string(j, "question");
      if (auto it = j.find("passages"); it != j.end() && !it->is_null()) {
        q.passages = string_list(*it, "passages");
      }
      if (auto it = j.find("gold"); it != j.end() && !it->is_null()) {
        q.gold = string_list(*it, "gold");
        if (q.gold->empty()) schema_error("gold", "must be non-empty when present");
      }
      questions.push_back(std::move(q));
    } catch (const Error& e) {
      rethrow_at(e, where);
    }
  }
  return questions;
}

void write_curve_csv(std::ostream& out, const AccuracyCostCurve& curve) {
  out << "cost_flops,accuracy,thresholds\n";
  for (const CurvePoint& p : curve.points()) {
    std::string thresholds;
    for (std::size_t i = 0; i < p.thresholds.size(); ++i) {
      if (i > 0) thresholds.push_back(';');
      thresholds += fmt::format("{}", p.thresholds[i]);
    }
    out << fmt::format("{},{:.6f},{}\n", p.cost, p.accuracy, thresholds);
  }
}

AccuracyCostCurve read_curve_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<CurvePoint> points;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = strip_cr(line);
    if (is_blank(text)) continue;
    const std::string where = fmt::format("{}:{}", source, line_no);
    if (!header) {
      if (text != "cost_flops,accuracy,thresholds") {
        throw Error(ErrorCode::kMalformedLine,
                    fmt::format("{}: expected header 'cost_flops,accuracy,thresholds'",
                                where));
      }
      header = true;
      continue;
    }
    const auto fields = split(text, ',');
    CurvePoint p;
    if (fields.size() != 3 || !parse_double(fields[0], p.cost) ||
        !parse_double(fields[1], p.accuracy)) {
      throw Error(ErrorCode::kMalformedLine,
                  fmt::format("{}: expected 'cost,accuracy,thresholds'", where));
    }
    if (!fields[2].empty()) {
      for (std::string_view t : split(fields[2], ';')) {
        double v = 0.0;
        if (!parse_double(t, v)) {
          throw Error(ErrorCode::kMalformedLine,
                      fmt::format("{}: bad threshold '{}'", where, t));
        }
        p.thresholds.push_back(v);
      }
    }
    points.push_back(std::move(p));
  }
  if (!header) {
    throw Error(ErrorCode::kMalformedLine, fmt::format("{}: empty curve file", source));
  }
  try {
    return AccuracyCostCurve(std::move(points));
  } catch (const Error& e) {
    rethrow_at(e, source);
  }
}

AccuracyCostCurve load_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, fmt::format("{}: cannot open", path.string()));
  }
  return read_curve_csv(in, path.string());
}

std::string serialize_outcome(const CascadeOutcome& outcome,
                              const CascadePolicy& policy) {
  ordered_json j;
  j["qid"] = outcome.qid;
  j["exit_stage"] = outcome.exit_stage;
  j["exit_stage_name"] = policy.stages.at(outcome.exit_stage).name;
  j["prediction"] = outcome.prediction;
  j["confidence"] = outcome.confidence_at_exit;
  j["cost_flops"] = outcome.cost;
  j["used"] = std::vector<int>(outcome.path.used().begin(), outcome.path.used().end());
  if (outcome.correct.has_value()) {
    j["correct"] = *outcome.correct;
  } else {
    j["correct"] = nullptr;
  }
  return j.dump();
}

}  // namespace qcascade
