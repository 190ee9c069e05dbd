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

#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "qcascade/cascade.h"
#include "qcascade/cost_model.h"
#include "qcascade/curves.h"
#include "qcascade/error.h"
#include "qcascade/http_backend.h"
#include "qcascade/io.h"
#include "qcascade/synth.h"

namespace qcascade::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kDefaultGrid = 20;

void configure_logging() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("qcascade");
    l->set_pattern("[%l] %v");
    return l;
  }();
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::err;
  if (const char* env = std::getenv("QCASCADE_LOG_LEVEL")) {
    const std::string v(env);
    if (v == "debug") {
      level = spdlog::level::debug;
    } else if (v == "info") {
      level = spdlog::level::info;
    } else if (v != "error") {
      spdlog::warn("ignoring QCASCADE_LOG_LEVEL={}; expected error, info or debug", v);
    }
  }
  spdlog::set_level(level);
}

std::vector<fs::path> to_paths(const std::vector<std::string>& files) {
  return {files.begin(), files.end()};
}

// Writes to --out when given, else to stdout.
template <typename Fn>
void emit(const std::string& out_path, std::ostream& out, Fn&& write) {
  if (out_path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw Error(ErrorCode::kIoError, fmt::format("{}: cannot write", out_path));
  }
  write(file);
  spdlog::info("wrote {}", out_path);
}

CascadePolicy policy_with_method(const std::string& policy_path,
                                 const std::string& method) {
  CascadePolicy policy = load_policy(policy_path);
  if (!method.empty()) policy.method = parse_method(method);
  return policy;
}

std::optional<std::size_t> parse_grid(const std::string& grid) {
  if (grid == "all") return std::nullopt;
  std::size_t pos = 0;
  unsigned long g = 0;
  try {
    g = std::stoul(grid, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != grid.size() || g < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("--grid must be 'all' or an integer >= 2, got '{}'", grid));
  }
  return g;
}

void print_summary(std::ostream& out, const CascadePolicy& policy,
                   const std::vector<CascadeOutcome>& outcomes) {
  std::vector<double> costs;
  std::vector<std::size_t> histogram(policy.stages.size(), 0);
  bool resolved = !outcomes.empty();
  for (const CascadeOutcome& o : outcomes) {
    costs.push_back(o.cost);
    ++histogram[o.exit_stage];
    resolved = resolved && o.correct.has_value();
  }
  out << fmt::format("questions: {}\n", outcomes.size());
  if (resolved) {
    out << fmt::format("accuracy: {:.6f}\n", accuracy(outcomes));
  } else {
    out << "accuracy: n/a\n";
  }
  if (!costs.empty()) {
    const double mean = dataset_cost(costs);
    out << fmt::format("mean_cost_flops: {}\n", mean);
    out << fmt::format("mean_cost_1e11: {:.4f}\n", mean / kReportFlopsUnit);
  }
  out << "exit_histogram:\n";
  for (std::size_t s = 0; s < policy.stages.size(); ++s) {
    out << fmt::format("  {}: {}\n", policy.stages[s].name, histogram[s]);
  }
}

void write_outcomes(const std::string& path, const CascadePolicy& policy,
                    const std::vector<CascadeOutcome>& outcomes) {
  if (path.empty()) return;
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIoError, fmt::format("{}: cannot write", path));
  for (const CascadeOutcome& o : outcomes) file << serialize_outcome(o, policy) << '\n';
}

struct Options {
  std::string policy;
  std::vector<std::string> logs;
  std::string method;
  std::string out;
  std::string outcomes;
  std::string grid;
  std::string curve;
  std::vector<double> range;
  double target = 0.0;
  std::string kind;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  bool sampled = false;
  bool raw = false;
  bool percent = false;
  bool calibration = false;
  std::size_t workers = 1;
  std::string config;
  std::string out_dir;
  std::string questions;
  std::vector<std::string> backends;
  int max_new_tokens = 32;
  double timeout = 30.0;
};

int cmd_validate(const Options& o, std::ostream& out) {
  std::optional<CascadePolicy> policy;
  if (!o.policy.empty()) {
    policy = load_policy(o.policy);
    out << fmt::format("policy: ok (K = {}, method {})\n", policy->iterations(),
                       method_name(policy->method));
  }
  if (!o.logs.empty()) {
    const PredictionLog logs = parse_logs(to_paths(o.logs));
    out << fmt::format("logs: ok ({} records, {} stages)\n", logs.size(),
                       logs.stages().size());
    if (policy.has_value()) {
      const auto problems = check_logs_against_policy(logs, *policy);
      for (const std::string& p : problems) out << "violation: " << p << '\n';
      if (!problems.empty()) return kExitData;
    }
  }
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const CascadePolicy policy = policy_with_method(o.policy, o.method);
  const PredictionLog logs = parse_logs(to_paths(o.logs));
  const auto outcomes = run_offline(logs, policy);
  print_summary(out, policy, outcomes);
  write_outcomes(o.outcomes, policy, outcomes);
  if (o.calibration) out << format_report(calibration_report(logs, policy.method));
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const CascadePolicy policy = policy_with_method(o.policy, o.method);
  const PredictionLog logs = parse_logs(to_paths(o.logs));
  CurveSet curves;
  if (policy.iterations() == 1 && o.grid.empty()) {
    curves = build_curve_k1(logs, policy, policy.method);
  } else {
    GridSpec grid;
    grid.resolution = o.grid.empty() ? std::optional<std::size_t>(kDefaultGrid)
                                     : parse_grid(o.grid);
    grid.workers = o.workers;
    curves = sweep_multi(logs, policy, policy.method, grid);
  }
  spdlog::info("sweep: {} raw points, {} on the frontier", curves.raw.size(),
               curves.frontier.size());
  emit(o.out, out, [&](std::ostream& s) {
    write_curve_csv(s, o.raw ? curves.raw : curves.frontier);
  });
  return kExitOk;
}

int cmd_auc(const Options& o, std::ostream& out) {
  const AccuracyCostCurve curve = load_curve_csv(o.curve);
  std::optional<std::pair<double, double>> range;
  if (!o.range.empty()) range = std::pair{o.range[0], o.range[1]};
  const double value = auc(curve, range);
  out << fmt::format("{}\n", o.percent ? value * 100.0 : value);
  return kExitOk;
}

int cmd_intersect(const Options& o, std::ostream& out) {
  const AccuracyCostCurve curve = load_curve_csv(o.curve);
  const double cost = cost_at_accuracy(curve, o.target);
  out << fmt::format("{}\n", cost);
  return kExitOk;
}

int cmd_baseline(const Options& o, std::ostream& out) {
  const CascadePolicy policy = policy_with_method(o.policy, o.method);
  const PredictionLog logs = parse_logs(to_paths(o.logs));
  const ScoredLog scored(logs, policy);
  AccuracyCostCurve curve;
  if (o.kind == "random") {
    if (o.sampled) {
      CurveSet set = baseline_random_sampled(scored, o.seed, o.steps);
      curve = o.raw ? set.raw : set.frontier;
    } else {
      curve = baseline_random(stage_anchors(scored), o.steps);
    }
  } else {
    CurveSet set = baseline_heuristic(scored);
    curve = o.raw ? set.raw : set.frontier;
  }
  emit(o.out, out, [&](std::ostream& s) { write_curve_csv(s, curve); });
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  const SynthConfig config = load_synth_config(o.config);
  const PredictionLog logs = generate(config, o.workers);
  for (const fs::path& p : write_log_dir(o.out_dir, logs)) {
    out << "wrote " << p.string() << '\n';
  }
  if (!logs.empty()) {
    const ConfidenceMethod method =
        o.method.empty() ? ConfidenceMethod::kProductAll : parse_method(o.method);
    out << format_report(calibration_report(logs, method));
  }
  return kExitOk;
}

int cmd_live(const Options& o, std::ostream& out, std::ostream& err) {
  const CascadePolicy policy = policy_with_method(o.policy, o.method);
  if (o.backends.size() != policy.stages.size()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("policy has {} stages but {} --backend URLs were given",
                            policy.stages.size(), o.backends.size()));
  }
  const std::vector<LiveQuestion> questions = load_questions(o.questions);
  std::vector<std::unique_ptr<HttpBackend>> owned;
  std::vector<StageBackend*> backends;
  for (const std::string& url : o.backends) {
    owned.push_back(std::make_unique<HttpBackend>(url, o.timeout));
    backends.push_back(owned.back().get());
  }
  LiveOptions options;
  options.max_new_tokens = o.max_new_tokens;
  options.workers = o.workers;
  const LiveResult result = run_live(backends, policy, questions, options);
  print_summary(out, policy, result.outcomes);
  write_outcomes(o.outcomes, policy, result.outcomes);
  for (const LiveFailure& f : result.failures) {
    err << fmt::format("qid '{}' failed at stage '{}': {}\n", f.qid,
                       policy.stages[f.stage].name, f.message);
  }
  out << fmt::format("failures: {}\n", result.failures.size());
  return result.failures.empty() ? kExitOk : kExitData;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  configure_logging();
  Options o;
  CLI::App app{"Confidence-cascaded reader inference and accuracy-cost evaluation",
               "qcascade"};
  app.require_subcommand(1);

  auto add_policy_logs = [&](CLI::App* cmd, bool logs_required) {
    cmd->add_option("--policy", o.policy, "Policy JSON file")->required();
    auto* logs = cmd->add_option("--logs", o.logs, "Prediction log JSONL files")
                     ;
    if (logs_required) logs->required();
    cmd->add_option("--method", o.method, "Override the policy's confidence method")
        ->check(CLI::IsMember({"ppa", "pf", "pfl", "pa"}));
  };

  auto* validate = app.add_subcommand("validate", "Check a policy and/or logs");
  validate->add_option("--policy", o.policy, "Policy JSON file");
  validate->add_option("--logs", o.logs, "Prediction log JSONL files")
      ;

  auto* eval = app.add_subcommand("eval", "Run a fixed-threshold cascade over logs");
  add_policy_logs(eval, true);
  eval->add_option("--outcomes", o.outcomes, "Write per-question outcomes as JSONL");
  eval->add_flag("--calibration", o.calibration, "Append a calibration report");

  auto* sweep = app.add_subcommand("sweep", "Sweep thresholds into an accuracy-cost curve");
  add_policy_logs(sweep, true);
  sweep->add_option("--grid", o.grid,
                    "Quantiles per stage, or 'all' (K = 1 defaults to exhaustive)");
  sweep->add_option("--workers", o.workers, "Threads for grid evaluation")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--raw", o.raw, "Emit every swept point, not just the frontier");
  sweep->add_option("--out", o.out, "Write the CSV here instead of stdout");

  auto* auc_cmd = app.add_subcommand("auc", "Area under a curve CSV");
  auc_cmd->add_option("--curve", o.curve, "Curve CSV")->required();
  auc_cmd->add_option("--range", o.range, "Cost range LO HI in FLOPs")->expected(2);
  auc_cmd->add_flag("--percent", o.percent, "Report in percent");

  auto* intersect = app.add_subcommand("intersect", "Cost at which a curve reaches an accuracy");
  intersect->add_option("--curve", o.curve, "Curve CSV")->required();
  intersect->add_option("--target", o.target, "Target accuracy fraction")
      ->required()
      ->check(CLI::Range(0.0, 1.0));

  auto* baseline = app.add_subcommand("baseline", "Random or question-length baseline curve");
  add_policy_logs(baseline, true);
  baseline->add_option("--kind", o.kind, "random or heuristic")
      ->required()
      ->check(CLI::IsMember({"random", "heuristic"}));
  baseline->add_option("--steps", o.steps, "Fractions per leg for the random baseline")
      ->check(CLI::PositiveNumber);
  baseline->add_flag("--sampled", o.sampled, "Sample random escalations instead of expectation");
  baseline->add_option("--seed", o.seed, "Seed for --sampled");
  baseline->add_flag("--raw", o.raw, "Emit every point, not just the frontier");
  baseline->add_option("--out", o.out, "Write the CSV here instead of stdout");

  auto* synth = app.add_subcommand("synth", "Generate synthetic prediction logs");
  synth->add_option("--config", o.config, "Synth config JSON")->required();
  synth->add_option("--out-dir", o.out_dir, "Directory for <stage>.jsonl files")->required();
  synth->add_option("--workers", o.workers, "Generator threads")->check(CLI::PositiveNumber);
  synth->add_option("--method", o.method, "Confidence method for the report")
      ->check(CLI::IsMember({"ppa", "pf", "pfl", "pa"}));

  auto* live = app.add_subcommand("live", "Run the cascade against stage backends");
  live->add_option("--policy", o.policy, "Policy JSON file")->required();
  live->add_option("--method", o.method, "Override the policy's confidence method")
      ->check(CLI::IsMember({"ppa", "pf", "pfl", "pa"}));
  live->add_option("--questions", o.questions, "Questions JSONL")->required();
  live->add_option("--backend", o.backends, "Backend base URL, one per stage in order")
      ->required();
  live->add_option("--max-new-tokens", o.max_new_tokens, "Generation limit sent to backends")
      ->check(CLI::PositiveNumber);
  live->add_option("--workers", o.workers, "Questions in flight")->check(CLI::PositiveNumber);
  live->add_option("--timeout", o.timeout, "Per-request timeout in seconds")
      ->check(CLI::PositiveNumber);
  live->add_option("--outcomes", o.outcomes, "Write per-question outcomes as JSONL");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) {
      if (o.policy.empty() && o.logs.empty()) {
        err << "validate: give --policy and/or --logs\n";
        return kExitUsage;
      }
      return cmd_validate(o, out);
    }
    if (eval->parsed()) return cmd_eval(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (auc_cmd->parsed()) return cmd_auc(o, out);
    if (intersect->parsed()) return cmd_intersect(o, out);
    if (baseline->parsed()) return cmd_baseline(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
    if (live->parsed()) return cmd_live(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace qcascade::cli
