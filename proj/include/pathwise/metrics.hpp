/*
 * Copyright 2026 The Pathwise Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PATHWISE_METRICS_HPP_
#define PATHWISE_METRICS_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathwise/datamodel.hpp"

namespace pathwise {

// Positive class is NoGrad4yr (at risk).
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const Outcome> predictions,
                          std::span<const Outcome> labels);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero denominators yield zero.
PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& counts);
double f1_from(double precision, double recall);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassReport {
  ClassScores at_risk;   // NoGrad4yr
  ClassScores on_time;   // Grad4yr
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  ConfusionCounts counts;
  int cohort_year = 0;

  std::size_t cases() const { return at_risk.support + on_time.support; }
  nlohmann::json to_json() const;
  static ClassReport from_json(const nlohmann::json& j);
};

// Support-weighted mean of per-class F1.
double weighted_f1(std::span<const double> f1s,
                   std::span<const std::size_t> supports);

// Throws ValidationError on length mismatch or empty input.
ClassReport class_report(std::span<const Outcome> predictions,
                         std::span<const Outcome> labels, int cohort_year = 0);

struct RocPoint {
  double threshold = 0.0;  // predict at risk when score >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

// Sweeps every distinct score; AUC by the trapezoid rule. The first point
// uses +inf as its threshold. Throws ValidationError when only one class is
// present or a score is not finite.
RocCurve roc_auc(std::span<const double> scores,
                 std::span<const Outcome> labels);

// Writes "threshold,fpr,tpr" rows.
void write_roc_csv(std::ostream& out, const RocCurve& curve);

// Table-style rows "<label> <precision> <recall> <f1> <support>" for each
// class plus a weighted row. When `baseline` is given each cell reads
// "model (baseline)".
std::string format_report_table(const ClassReport& model,
                                const ClassReport* baseline = nullptr);

}  // namespace pathwise

#endif  // PATHWISE_METRICS_HPP_
