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

// Accuracy-cost curves: threshold sweeps, Pareto frontiers, AUC, the
// cost-at-equal-accuracy query, and the random / question-length baselines.

#ifndef QCASCADE_CURVES_H_
#define QCASCADE_CURVES_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcascade/cascade.h"

namespace qcascade {

struct CurvePoint {
  double cost = 0.0;      // Mean FLOPs per question.
  double accuracy = 0.0;  // Fraction in [0, 1].
  std::vector<double> thresholds;

  bool operator==(const CurvePoint&) const = default;
};

// Points sorted by strictly increasing cost. Among input points sharing a
// cost only the most accurate is kept (the earliest one on ties).
class AccuracyCostCurve {
 public:
  AccuracyCostCurve() = default;
  // Throws Error(kInvalidInput) on a negative or non-finite cost or an
  // accuracy outside [0, 1].
  explicit AccuracyCostCurve(std::vector<CurvePoint> points);

  const std::vector<CurvePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const CurvePoint& front() const { return points_.front(); }
  const CurvePoint& back() const { return points_.back(); }

  // Linear interpolation, constant beyond either end. Requires >= 1 point.
  double accuracy_at(double cost) const;

 private:
  std::vector<CurvePoint> points_;
};

// Raw sweep output alongside its Pareto-reduced frontier.
struct CurveSet {
  AccuracyCostCurve raw;
  AccuracyCostCurve frontier;
};

// Fraction of correct outcomes. Throws Error(kInvalidInput) on an empty list
// or an outcome without resolved correctness.
double accuracy(std::span<const CascadeOutcome> outcomes);

// Per-question, per-stage confidence and correctness tables precomputed from
// complete logs, so a threshold vector can be evaluated in O(N * stages)
// with the same exit rule and cost accounting as run_offline.
class ScoredLog {
 public:
  // `policy` supplies stages, method and costs; its thresholds are ignored.
  // Every stage-0 qid needs a record with gold answers at every stage:
  // throws kMissingStageRecord / kInvalidInput otherwise.
  ScoredLog(const PredictionLog& logs, const CascadePolicy& policy);

  std::size_t questions() const { return qids_.size(); }
  std::size_t stages() const { return exit_costs_.size(); }
  const std::vector<std::string>& qids() const { return qids_; }
  const CascadePolicy& policy() const { return policy_; }

  double confidence(std::size_t question, std::size_t stage) const {
    return confidence_[question * stages() + stage];
  }
  bool correct(std::size_t question, std::size_t stage) const {
    return correct_[question * stages() + stage] != 0;
  }
  // Question length in Unicode code points.
  std::size_t question_length(std::size_t question) const {
    return question_length_[question];
  }
  // instance_cost of a question exiting at `stage`.
  double exit_cost(std::size_t stage) const { return exit_costs_[stage]; }

  // Point for a full threshold vector (one per non-final stage). Thresholds
  // are not range-checked, so a value above 1 escalates everything.
  CurvePoint evaluate(std::span<const double> thresholds) const;
  // Point for explicit per-question exit stages.
  CurvePoint evaluate_exits(std::span<const std::size_t> exits) const;
  // Point where every question exits at `stage`.
  CurvePoint anchor(std::size_t stage) const;

  // Sorted distinct confidences observed at `stage`.
  std::vector<double> distinct_confidences(std::size_t stage) const;

 private:
  CascadePolicy policy_;
  std::vector<std::string> qids_;
  std::vector<double> confidence_;
  std::vector<char> correct_;
  std::vector<std::size_t> question_length_;
  std::vector<double> exit_costs_;
};

// Smallest threshold that escalates every observed confidence.
double threshold_above(double max_confidence);

// Keeps the points no other point dominates (no cheaper-or-equal point is
// strictly more accurate, no strictly cheaper point is at least as
// accurate), then dedupes equal costs. Input must be non-empty.
AccuracyCostCurve pareto_frontier(std::span<const CurvePoint> points);

// K = 1 sweep. Candidate CB thresholds are every distinct CB confidence plus
// 0 and threshold_above(max). The raw curve starts at the pure-CB point and
// ends at the full-escalation point.
CurveSet build_curve_k1(const PredictionLog& logs, const CascadePolicy& policy,
                        ConfidenceMethod method);

struct GridSpec {
  // Evenly spaced quantiles of each stage's confidences; nullopt means every
  // distinct confidence.
  std::optional<std::size_t> resolution;
  std::size_t workers = 1;
};

inline constexpr std::size_t kMaxGridCombinations = 1'000'000;

// Grid candidates for one stage: the chosen confidences plus the 0 and
// above-max sentinels, sorted and unique.
std::vector<double> grid_candidates(const ScoredLog& scored, std::size_t stage,
                                    std::optional<std::size_t> resolution);

// Cartesian sweep over per-stage candidates for any K >= 1. Throws
// Error(kGridTooLarge) above kMaxGridCombinations and Error(kInvalidInput)
// for a resolution below 2 or K = 0.
CurveSet sweep_multi(const PredictionLog& logs, const CascadePolicy& policy,
                     ConfidenceMethod method, const GridSpec& grid);
CurveSet sweep_multi(const ScoredLog& scored, const GridSpec& grid);

// Mean accuracy over [lo, hi] under linear interpolation with constant
// extrapolation; defaults to the curve's own span. Throws
// Error(kInvalidInput) for fewer than two points or lo >= hi.
double auc(const AccuracyCostCurve& curve,
           std::optional<std::pair<double, double>> range = std::nullopt);

// Union of the spans of several curves, for comparing AUCs on one range.
std::pair<double, double> common_range(std::span<const AccuracyCostCurve> curves);

// Minimal cost at which the interpolated accuracy reaches `target`.
// Throws Error(kTargetUnreachable) if the curve never gets there and
// Error(kInvalidInput) for fewer than two points.
double cost_at_accuracy(const AccuracyCostCurve& curve, double target);

// Random escalation in expectation: escalating a fraction f of questions
// between consecutive anchors moves cost and accuracy linearly. Each leg is
// sampled at `steps + 1` evenly spaced fractions. Anchors must have strictly
// increasing cost; throws Error(kInvalidInput) for fewer than two.
AccuracyCostCurve baseline_random(std::span<const CurvePoint> anchors,
                                  std::size_t steps = 100);

// Sampled random escalation: at each fraction f of leg j every question that
// reached stage j - 1 moves on independently with probability f.
CurveSet baseline_random_sampled(const ScoredLog& scored, std::uint64_t seed,
                                 std::size_t steps = 100);

// Escalates the longest questions first (ties by qid), leg by leg, one
// question at a time.
CurveSet baseline_heuristic(const ScoredLog& scored);

// Anchor points for every stage (pure exit at that stage).
std::vector<CurvePoint> stage_anchors(const ScoredLog& scored);

}  // namespace qcascade

#endif  // QCASCADE_CURVES_H_
