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

// FLOPs accounting for closed-book (CB) and open-book (OB) reader stages.
//
// An OB stage that reads S passages costs S * c_ob: a fusion-style reader
// encodes every passage independently and the decoder cost is folded into
// the per-passage constant. A cascade always pays the CB stage, then each OB
// iteration it escalates into.
//
// Two accounting modes are supported:
//   kUpperBound    every OB iteration re-encodes all of its passages.
//   kEncoderReuse  iteration k only encodes the S_k - S_{k-1} passages the
//                  previous iteration did not already encode.

#ifndef QCASCADE_COST_MODEL_H_
#define QCASCADE_COST_MODEL_H_

#include <span>
#include <string_view>
#include <vector>

namespace qcascade {

// Plain FLOPs count. Reports divide by this to match the usual tables.
inline constexpr double kReportFlopsUnit = 1e11;

enum class CostMode { kUpperBound, kEncoderReuse };
enum class StageKind { kClosedBook, kOpenBook };

std::string_view cost_mode_name(CostMode mode);  // "upper_bound" / "encoder_reuse"
CostMode parse_cost_mode(std::string_view name);
std::string_view stage_kind_name(StageKind kind);  // "cb" / "ob"
StageKind parse_stage_kind(std::string_view name);

class CostModel {
 public:
  // Throws Error(kInvalidInput) unless c_cb >= 0 and c_ob > 0 (both finite).
  CostModel(double c_cb, double c_ob, CostMode mode = CostMode::kUpperBound);

  double c_cb() const { return c_cb_; }
  double c_ob() const { return c_ob_; }
  CostMode mode() const { return mode_; }

  bool operator==(const CostModel&) const = default;

 private:
  double c_cb_;
  double c_ob_;
  CostMode mode_;
};

// Which OB iterations a question went through. `used` must be a prefix of
// ones followed by zeros and `passages` strictly increasing and positive.
class EscalationPath {
 public:
  // Throws Error(kInvalidInput) on size mismatch or a non-prefix `used`, and
  // Error(kNonIncreasingPassages) on bad passage counts.
  EscalationPath(std::vector<bool> used, std::vector<int> passages);

  // Path for a question that exits at `exit_stage` (0 = CB) of a cascade
  // whose OB iterations read `passages`.
  static EscalationPath for_exit(std::size_t exit_stage,
                                 std::vector<int> passages);

  std::size_t iterations() const { return passages_.size(); }
  std::size_t used_count() const;
  bool used(std::size_t k) const { return used_[k]; }
  const std::vector<bool>& used() const { return used_; }
  const std::vector<int>& passages() const { return passages_; }

  bool operator==(const EscalationPath&) const = default;

 private:
  std::vector<bool> used_;
  std::vector<int> passages_;
};

// Cost of one stage. For kClosedBook `passages` must be 0 and the result is
// c_cb. For kOpenBook, `previous_passages` is the passage count of the
// previously executed OB iteration (0 if none) and matters only in
// kEncoderReuse mode. Throws Error(kInvalidInput) if previous_passages >=
// passages or passages < 1 for OB, or passages != 0 for CB.
double stage_cost(const CostModel& model, StageKind kind, int passages,
                  int previous_passages = 0);

// c_cb plus the cost of every used OB iteration. Exactly c_cb when no OB
// iteration is used.
double instance_cost(const CostModel& model, const EscalationPath& path);

// Arithmetic mean of per-instance costs. A constant input returns that
// constant exactly and the result is clamped into [min, max] of the inputs. Throws
// Error(kInvalidInput) on an empty span.
double dataset_cost(std::span<const double> costs);

}  // namespace qcascade

#endif  // QCASCADE_COST_MODEL_H_
