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

#include "qcascade/cost_model.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "qcascade/error.h"

namespace qcascade {

std::string_view cost_mode_name(CostMode mode) {
  return mode == CostMode::kUpperBound ? "upper_bound" : "encoder_reuse";
}

CostMode parse_cost_mode(std::string_view name) {
  if (name == "upper_bound") return CostMode::kUpperBound;
  if (name == "encoder_reuse") return CostMode::kEncoderReuse;
  throw Error(ErrorCode::kInvalidInput,
              fmt::format("unknown cost mode '{}'", name));
}

std::string_view stage_kind_name(StageKind kind) {
  return kind == StageKind::kClosedBook ? "cb" : "ob";
}

StageKind parse_stage_kind(std::string_view name) {
  if (name == "cb") return StageKind::kClosedBook;
  if (name == "ob") return StageKind::kOpenBook;
  throw Error(ErrorCode::kInvalidInput,
              fmt::format("unknown stage kind '{}'", name));
}

CostModel::CostModel(double c_cb, double c_ob, CostMode mode)
    : c_cb_(c_cb), c_ob_(c_ob), mode_(mode) {
  if (!std::isfinite(c_cb) || c_cb < 0.0) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("c_cb must be finite and >= 0, got {}", c_cb));
  }
  if (!std::isfinite(c_ob) || c_ob <= 0.0) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("c_ob must be finite and > 0, got {}", c_ob));
  }
}

EscalationPath::EscalationPath(std::vector<bool> used, std::vector<int> passages)
    : used_(std::move(used)), passages_(std::move(passages)) {
  if (used_.size() != passages_.size()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("path has {} indicators for {} iterations",
                            used_.size(), passages_.size()));
  }
  for (std::size_t k = 1; k < used_.size(); ++k) {
    if (used_[k] && !used_[k - 1]) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("iteration {} used without iteration {}", k + 1, k));
    }
  }
  for (std::size_t k = 0; k < passages_.size(); ++k) {
    if (passages_[k] < 1 || (k > 0 && passages_[k] <= passages_[k - 1])) {
      throw Error(ErrorCode::kNonIncreasingPassages,
                  fmt::format("passages must be positive and strictly "
                              "increasing (iteration {} has {})",
                              k + 1, passages_[k]));
    }
  }
}

EscalationPath EscalationPath::for_exit(std::size_t exit_stage,
                                        std::vector<int> passages) {
  if (exit_stage > passages.size()) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("exit stage {} beyond {} OB iterations", exit_stage,
                            passages.size()));
  }
  std::vector<bool> used(passages.size(), false);
  std::fill_n(used.begin(), exit_stage, true);
  return EscalationPath(std::move(used), std::move(passages));
}

std::size_t EscalationPath::used_count() const {
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), true));
}

double stage_cost(const CostModel& model, StageKind kind, int passages,
                  int previous_passages) {
  if (kind == StageKind::kClosedBook) {
    if (passages != 0) {
      throw Error(ErrorCode::kInvalidInput,
                  fmt::format("closed-book stage with {} passages", passages));
    }
    return model.c_cb();
  }
  if (passages < 1 || previous_passages < 0 || previous_passages >= passages) {
    throw Error(ErrorCode::kInvalidInput,
                fmt::format("open-book stage needs 0 <= previous ({}) < "
                            "passages ({})",
                            previous_passages, passages));
  }
  const int charged = model.mode() == CostMode::kUpperBound
                          ? passages
                          : passages - previous_passages;
  return static_cast<double>(charged) * model.c_ob();
}

double instance_cost(const CostModel& model, const EscalationPath& path) {
  double cost = model.c_cb();
  int previous = 0;
  for (std::size_t k = 0; k < path.iterations() && path.used(k); ++k) {
    cost += stage_cost(model, StageKind::kOpenBook, path.passages()[k], previous);
    previous = path.passages()[k];
  }
  return cost;
}

double dataset_cost(std::span<const double> costs) {
  if (costs.empty()) {
    throw Error(ErrorCode::kInvalidInput, "dataset_cost of an empty list");
  }
  double lo = costs.front();
  double hi = costs.front();
  // Neumaier-compensated sum: exact for integer FLOP counts below 2^53, so
  // equal multisets of costs give equal means regardless of order.
  double sum = 0.0;
  double compensation = 0.0;
  for (double c : costs) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    const double t = sum + c;
    if (std::abs(sum) >= std::abs(c)) {
      compensation += (sum - t) + c;
    } else {
      compensation += (c - t) + sum;
    }
    sum = t;
  }
  if (lo == hi) return lo;
  const double mean = (sum + compensation) / static_cast<double>(costs.size());
  return std::clamp(mean, lo, hi);
}

}  // namespace qcascade
