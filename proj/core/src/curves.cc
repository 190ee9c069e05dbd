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

#include "qcascade/curves.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <fmt/format.h>

#include "parallel.h"
#include "qcascade/error.h"

namespace qcascade {
namespace {

void check_point(const CurvePoint& p) {
  if (!std::isfinite(p.cost) || p.cost < 0.0) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("curve point cost {} is not a finite value >= 0", p.cost));
  }
  if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("curve point accuracy {} is outside [0, 1]", p.accuracy));
  }
}

// Stable sort by cost ascending, accuracy descending.
void sort_points(std::vector<CurvePoint>& points) {
  std::stable_sort(points.begin(), points.end(),
                   [](const CurvePoint& a, const CurvePoint& b) {
                     if (a.cost != b.cost) return a.cost < b.cost;
                     return a.accuracy > b.accuracy;
                   });
}

CascadePolicy template_policy(const CascadePolicy& policy) {
  CascadePolicy p = policy;
  std::vector<double> zeros(p.iterations(), 0.0);
  p = p.with_thresholds(zeros);
  p.stages.back().threshold.reset();
  validate_policy(p);
  return p;
}

double interpolate(const CurvePoint& a, const CurvePoint& b, double cost) {
  const double t = (cost - a.cost) / (b.cost - a.cost);
  return a.accuracy + t * (b.accuracy - a.accuracy);
}

CurveSet make_curve_set(std::vector<CurvePoint> points) {
  CurveSet out;
  out.frontier = pareto_frontier(points);
  out.raw = AccuracyCostCurve(std::move(points));
  return out;
}

}  // namespace

AccuracyCostCurve::AccuracyCostCurve(std::vector<CurvePoint> points) {
  for (const CurvePoint& p : points) check_point(p);
  sort_points(points);
  for (CurvePoint& p : points) {
    if (!points_.empty() && points_.back().cost == p.cost) continue;
    points_.push_back(std::move(p));
  }
}

double AccuracyCostCurve::accuracy_at(double cost) const {
  if (points_.empty()) {
    throw Error(ErrorCode::kInvalidInput, "accuracy_at on an empty curve");
  }
  if (cost <= points_.front().cost) return points_.front().accuracy;
  if (cost >= points_.back().cost) return points_.back().accuracy;
  auto hi = std::upper_bound(points_.begin(), points_.end(), cost,
                             [](double c, const CurvePoint& p) { return c < p.cost; });
  return interpolate(*(hi - 1), *hi, cost);
}

double accuracy(std::span<const CascadeOutcome> outcomes) {
  if (outcomes.empty()) {
    throw Error(ErrorCode::kInvalidInput, "accuracy of an empty outcome list");
  }
  std::size_t correct = 0;
  for (const CascadeOutcome& o : outcomes) {
    if (!o.correct.has_value()) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("qid '{}' has no resolved correctness", o.qid));
    }
    correct += *o.correct ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

ScoredLog::ScoredLog(const PredictionLog& logs, const CascadePolicy& policy)
    : policy_(template_policy(policy)) {
  const std::size_t n_stages = policy_.stages.size();
  const std::vector<int> passages = policy_.ob_passages();
  for (std::size_t s = 0; s < n_stages; ++s) {
    exit_costs_.push_back(
        instance_cost(policy_.cost, EscalationPath::for_exit(s, passages)));
  }

  const auto* first = logs.stage(policy_.stages.front().name);
  if (first == nullptr) return;
  qids_.reserve(first->size());
  confidence_.reserve(first->size() * n_stages);
  correct_.reserve(first->size() * n_stages);
  for (const auto& [qid, first_record] : *first) {
    qids_.push_back(qid);
    question_length_.push_back(utf8_length(first_record.question));
    for (std::size_t s = 0; s < n_stages; ++s) {
      const PredictionRecord* r = logs.find(policy_.stages[s].name, qid);
      if (r == nullptr) {
        throw Error(ErrorCode::kMissingStageRecord,
                    fmt::format("qid '{}' stage '{}'", qid, policy_.stages[s].name));
      }
      const auto& gold = r->gold.has_value() ? r->gold : first_record.gold;
      if (!gold.has_value() || gold->empty()) {
        throw Error(ErrorCode::kInvalidInput,
                    fmt::format("qid '{}' stage '{}' has no gold answers", qid,
                                r->stage));
      }
      confidence_.push_back(qcascade::confidence(policy_.method, r->token_probs));
      correct_.push_back(exact_match(r->prediction, *gold) ? 1 : 0);
    }
  }
}

CurvePoint ScoredLog::evaluate(std::span<const double> thresholds) const {
  if (thresholds.size() + 1 != stages()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("{} thresholds for {} stages", thresholds.size(),
                            stages()));
  }
  std::vector<std::size_t> exits(questions());
  for (std::size_t q = 0; q < questions(); ++q) {
    exits[q] = decide_exit(
        std::span<const double>(confidence_).subspan(q * stages(), stages()),
        thresholds);
  }
  CurvePoint p = evaluate_exits(exits);
  p.thresholds.assign(thresholds.begin(), thresholds.end());
  return p;
}

CurvePoint ScoredLog::evaluate_exits(std::span<const std::size_t> exits) const {
  if (exits.size() != questions() || questions() == 0) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("{} exits for {} questions", exits.size(), questions()));
  }
  std::vector<double> costs(questions());
  std::size_t n_correct = 0;
  for (std::size_t q = 0; q < questions(); ++q) {
    costs[q] = exit_costs_[exits[q]];
    n_correct += correct(q, exits[q]) ? 1 : 0;
  }
  CurvePoint p;
  p.cost = dataset_cost(costs);
  p.accuracy = static_cast<double>(n_correct) / static_cast<double>(questions());
  return p;
}

CurvePoint ScoredLog::anchor(std::size_t stage) const {
  std::vector<std::size_t> exits(questions(), stage);
  return evaluate_exits(exits);
}

std::vector<double> ScoredLog::distinct_confidences(std::size_t stage) const {
  std::vector<double> values(questions());
  for (std::size_t q = 0; q < questions(); ++q) values[q] = confidence(q, stage);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

double threshold_above(double max_confidence) {
  return std::nextafter(max_confidence, std::numeric_limits<double>::infinity());
}

AccuracyCostCurve pareto_frontier(std::span<const CurvePoint> points) {
  if (points.empty()) {
    throw Error(ErrorCode::kInvalidInput, "pareto_frontier of no points");
  }
  std::vector<CurvePoint> sorted(points.begin(), points.end());
  for (const CurvePoint& p : sorted) check_point(p);
  sort_points(sorted);
  std::vector<CurvePoint> kept;
  for (CurvePoint& p : sorted) {
    // Everything already kept is cheaper or equally cheap, so p survives
    // only by being strictly more accurate than all of it.
    if (!kept.empty() && p.accuracy <= kept.back().accuracy) continue;
    kept.push_back(std::move(p));
  }
  return AccuracyCostCurve(std::move(kept));
}

CurveSet build_curve_k1(const PredictionLog& logs, const CascadePolicy& policy,
                        ConfidenceMethod method) {
  if (policy.iterations() != 1) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("build_curve_k1 needs K = 1, policy has K = {}",
                            policy.iterations()));
  }
  CascadePolicy p = policy;
  p.method = method;
  const ScoredLog scored(logs, p);
  GridSpec grid;
  grid.resolution = std::nullopt;
  return sweep_multi(scored, grid);
}

std::vector<double> grid_candidates(const ScoredLog& scored, std::size_t stage,
                                    std::optional<std::size_t> resolution) {
  std::vector<double> candidates{0.0};
  if (scored.questions() == 0) return candidates;
  if (resolution.has_value()) {
    std::vector<double> sorted(scored.questions());
    for (std::size_t q = 0; q < scored.questions(); ++q) {
      sorted[q] = scored.confidence(q, stage);
    }
    std::sort(sorted.begin(), sorted.end());
    const std::size_t g = *resolution;
    const double last = static_cast<double>(sorted.size() - 1);
    for (std::size_t j = 0; j < g; ++j) {
      // Nearest-rank quantile, so every candidate is an observed value.
      const double rank = last * static_cast<double>(j) / static_cast<double>(g - 1);
      candidates.push_back(sorted[static_cast<std::size_t>(std::llround(rank))]);
    }
    candidates.push_back(threshold_above(sorted.back()));
  } else {
    const std::vector<double> distinct = scored.distinct_confidences(stage);
    candidates.insert(candidates.end(), distinct.begin(), distinct.end());
    candidates.push_back(threshold_above(distinct.back()));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  return candidates;
}

CurveSet sweep_multi(const PredictionLog& logs, const CascadePolicy& policy,
                     ConfidenceMethod method, const GridSpec& grid) {
  CascadePolicy p = policy;
  p.method = method;
  return sweep_multi(ScoredLog(logs, p), grid);
}

CurveSet sweep_multi(const ScoredLog& scored, const GridSpec& grid) {
  const std::size_t k = scored.stages() - 1;
  if (k == 0) {
    throw Error(ErrorCode::kInvalidInput, "threshold sweep needs K >= 1");
  }
  if (grid.resolution.has_value() && *grid.resolution < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("grid resolution {} is below 2", *grid.resolution));
  }
  if (scored.questions() == 0) {
    throw Error(ErrorCode::kInvalidInput, "threshold sweep over an empty log");
  }

  std::vector<std::vector<double>> axes;
  std::size_t combinations = 1;
  for (std::size_t s = 0; s < k; ++s) {
    axes.push_back(grid_candidates(scored, s, grid.resolution));
    if (combinations > kMaxGridCombinations / axes.back().size()) {
      throw Error(ErrorCode::kGridTooLarge,
                  fmt::format("threshold grid exceeds {} combinations",
                              kMaxGridCombinations));
    }
    combinations *= axes.back().size();
  }

  // Combination i enumerates the grid in lexicographic threshold order with
  // the last stage varying fastest.
  std::vector<CurvePoint> points(combinations);
  internal::parallel_for(combinations, grid.workers, [&](std::size_t i) {
    std::vector<double> thresholds(k);
    std::size_t rest = i;
    for (std::size_t s = k; s-- > 0;) {
      thresholds[s] = axes[s][rest % axes[s].size()];
      rest /= axes[s].size();
    }
    points[i] = scored.evaluate(thresholds);
  });
  return make_curve_set(std::move(points));
}

double auc(const AccuracyCostCurve& curve,
           std::optional<std::pair<double, double>> range) {
  if (curve.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("AUC needs at least 2 points, curve has {}", curve.size()));
  }
  const auto [lo, hi] = range.value_or(
      std::pair<double, double>{curve.front().cost, curve.back().cost});
  if (!(lo < hi)) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("AUC range [{}, {}] is empty", lo, hi));
  }
  std::vector<double> knots{lo};
  for (const CurvePoint& p : curve.points()) {
    if (p.cost > lo && p.cost < hi) knots.push_back(p.cost);
  }
  knots.push_back(hi);

  // Width-weighted mean of the trapezoid midpoints, taken relative to the
  // first point's accuracy so that a flat curve integrates exactly.
  const double ref = curve.front().accuracy;
  double weighted = 0.0;
  double width = 0.0;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double w = knots[i] - knots[i - 1];
    const double mid = (curve.accuracy_at(knots[i - 1]) - ref +
                        curve.accuracy_at(knots[i]) - ref) / 2.0;
    weighted += w * mid;
    width += w;
  }
  return ref + weighted / width;
}

std::pair<double, double> common_range(std::span<const AccuracyCostCurve> curves) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const AccuracyCostCurve& c : curves) {
    if (c.empty()) continue;
    lo = std::min(lo, c.front().cost);
    hi = std::max(hi, c.back().cost);
  }
  if (!(lo < hi)) {
    throw Error(ErrorCode::kInvalidInput, "curves do not span a cost range");
  }
  return {lo, hi};
}

double cost_at_accuracy(const AccuracyCostCurve& curve, double target) {
  if (curve.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("cost_at_accuracy needs at least 2 points, curve has {}",
                            curve.size()));
  }
  const auto& pts = curve.points();
  if (pts.front().accuracy >= target) return pts.front().cost;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const CurvePoint& a = pts[i - 1];
    const CurvePoint& b = pts[i];
    if (b.accuracy >= target) {
      // a.accuracy < target <= b.accuracy, so the segment rises through it.
      const double t = (target - a.accuracy) / (b.accuracy - a.accuracy);
      return std::min(b.cost, a.cost + t * (b.cost - a.cost));
    }
  }
  throw Error(ErrorCode::kTargetUnreachable,
              fmt::format("accuracy {} is above the curve maximum", target));
}

AccuracyCostCurve baseline_random(std::span<const CurvePoint> anchors,
                                  std::size_t steps) {
  if (anchors.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("random baseline needs >= 2 anchors, got {}",
                            anchors.size()));
  }
  if (steps < 1) {
    throw Error(ErrorCode::kInvalidInput, "random baseline needs >= 1 step");
  }
  for (std::size_t j = 1; j < anchors.size(); ++j) {
    if (!(anchors[j].cost > anchors[j - 1].cost)) {
      throw Error(ErrorCode::kInvalidInput,
                  "random baseline anchors must have increasing cost");
    }
  }
  std::vector<CurvePoint> points{anchors.front()};
  points.front().thresholds.clear();
  for (std::size_t j = 1; j < anchors.size(); ++j) {
    const CurvePoint& a = anchors[j - 1];
    const CurvePoint& b = anchors[j];
    for (std::size_t i = 1; i <= steps; ++i) {
      CurvePoint p;
      if (i == steps) {
        p.cost = b.cost;
        p.accuracy = b.accuracy;
      } else {
        const double f = static_cast<double>(i) / static_cast<double>(steps);
        p.cost = a.cost + f * (b.cost - a.cost);
        p.accuracy = a.accuracy + f * (b.accuracy - a.accuracy);
      }
      points.push_back(std::move(p));
    }
  }
  return AccuracyCostCurve(std::move(points));
}

CurveSet baseline_random_sampled(const ScoredLog& scored, std::uint64_t seed,
                                 std::size_t steps) {
  if (scored.questions() == 0 || scored.stages() < 2 || steps < 1) {
    throw Error(ErrorCode::kInvalidInput,
                "sampled random baseline needs questions, K >= 1 and steps >= 1");
  }
  boost::random::mt19937_64 rng(seed);
  std::vector<CurvePoint> points{scored.anchor(0)};
  for (std::size_t leg = 1; leg < scored.stages(); ++leg) {
    for (std::size_t i = 1; i <= steps; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(steps);
      boost::random::bernoulli_distribution<double> escalate(f);
      std::vector<std::size_t> exits(scored.questions(), leg - 1);
      for (std::size_t& e : exits) {
        if (escalate(rng)) e = leg;
      }
      points.push_back(scored.evaluate_exits(exits));
    }
  }
  return make_curve_set(std::move(points));
}

CurveSet baseline_heuristic(const ScoredLog& scored) {
  if (scored.questions() == 0 || scored.stages() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                "heuristic baseline needs questions and K >= 1");
  }
  // qids are already sorted, so a stable sort on length settles ties by qid.
  std::vector<std::size_t> order(scored.questions());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored.question_length(a) > scored.question_length(b);
  });

  std::vector<CurvePoint> points{scored.anchor(0)};
  std::vector<std::size_t> exits(scored.questions(), 0);
  for (std::size_t leg = 1; leg < scored.stages(); ++leg) {
    for (std::size_t m = 0; m < order.size(); ++m) {
      exits[order[m]] = leg;
      points.push_back(scored.evaluate_exits(exits));
    }
  }
  return make_curve_set(std::move(points));
}

std::vector<CurvePoint> stage_anchors(const ScoredLog& scored) {
  std::vector<CurvePoint> anchors;
  for (std::size_t s = 0; s < scored.stages(); ++s) {
    anchors.push_back(scored.anchor(s));
  }
  return anchors;
}

}  // namespace qcascade
