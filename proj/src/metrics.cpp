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

#include "pathwise/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "pathwise/error.hpp"

namespace pathwise {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json scores_json(const ClassScores& s) {
  return {{"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1},
          {"support", s.support}};
}

ClassScores scores_from(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>(), j.at("support").get<std::size_t>()};
}

std::string two_dp(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

ConfusionCounts confusion(std::span<const Outcome> predictions,
                          std::span<const Outcome> labels) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("predictions and labels differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == Outcome::kNoGrad4yr;
    const bool truth = labels[i] == Outcome::kNoGrad4yr;
    if (pred && truth) {
      ++c.tp;
    } else if (pred) {
      ++c.fp;
    } else if (truth) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double f1_from(double precision, double recall) {
  const double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& counts) {
  PrecisionRecallF1 out;
  out.precision = ratio(counts.tp, counts.tp + counts.fp);
  out.recall = ratio(counts.tp, counts.tp + counts.fn);
  out.f1 = f1_from(out.precision, out.recall);
  return out;
}

double weighted_f1(std::span<const double> f1s,
                   std::span<const std::size_t> supports) {
  if (f1s.size() != supports.size() || f1s.empty()) {
    throw ValidationError("weighted_f1 needs one support per class");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < f1s.size(); ++i) {
    num += f1s[i] * static_cast<double>(supports[i]);
    den += static_cast<double>(supports[i]);
  }
  return den == 0.0 ? 0.0 : num / den;
}

ClassReport class_report(std::span<const Outcome> predictions,
                         std::span<const Outcome> labels, int cohort_year) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("predictions and labels differ in length");
  }
  if (labels.empty()) throw ValidationError("class_report on empty input");
  ClassReport r;
  r.cohort_year = cohort_year;
  r.counts = confusion(predictions, labels);
  const auto& c = r.counts;

  const auto pos = precision_recall_f1(c);
  r.at_risk = {pos.precision, pos.recall, pos.f1, c.tp + c.fn};
  // The on-time class is the positive class of the mirrored table.
  const auto neg =
      precision_recall_f1(ConfusionCounts{c.tn, c.fn, c.tp, c.fp});
  r.on_time = {neg.precision, neg.recall, neg.f1, c.tn + c.fp};

  const double f1s[] = {r.at_risk.f1, r.on_time.f1};
  const std::size_t supports[] = {r.at_risk.support, r.on_time.support};
  r.weighted_f1 = weighted_f1(f1s, supports);
  r.accuracy = ratio(c.tp + c.tn, c.total());
  return r;
}

nlohmann::json ClassReport::to_json() const {
  return {{"cohort_year", cohort_year},
          {"at_risk", scores_json(at_risk)},
          {"graduate_on_time", scores_json(on_time)},
          {"weighted_f1", weighted_f1},
          {"accuracy", accuracy},
          {"cases", cases()},
          {"confusion",
           {{"tp", counts.tp},
            {"fp", counts.fp},
            {"tn", counts.tn},
            {"fn", counts.fn}}}};
}

ClassReport ClassReport::from_json(const nlohmann::json& j) {
  try {
    ClassReport r;
    r.cohort_year = j.at("cohort_year").get<int>();
    r.at_risk = scores_from(j.at("at_risk"));
    r.on_time = scores_from(j.at("graduate_on_time"));
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    const auto& c = j.at("confusion");
    r.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                c.at("tn").get<std::size_t>(), c.at("fn").get<std::size_t>()};
    return r;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed report JSON: ") + ex.what());
  }
}

RocCurve roc_auc(std::span<const double> scores,
                 std::span<const Outcome> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("scores and labels differ in length");
  }
  std::size_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw ValidationError("non-finite score");
    if (labels[i] == Outcome::kNoGrad4yr) ++positives;
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw ValidationError("ROC/AUC is undefined with a single class");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    // Everything tied at this score crosses the threshold together.
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == Outcome::kNoGrad4yr) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    const RocPoint prev = curve.points.back();
    const RocPoint next{threshold, ratio(fp, negatives), ratio(tp, positives)};
    area += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) / 2.0;
    curve.points.push_back(next);
  }
  curve.auc = area;
  return curve;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "threshold,fpr,tpr\n";
  char buf[128];
  for (const auto& p : curve.points) {
    if (std::isinf(p.threshold)) {
      std::snprintf(buf, sizeof(buf), "inf,%.17g,%.17g\n", p.fpr, p.tpr);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.threshold,
                    p.fpr, p.tpr);
    }
    out << buf;
  }
}

std::string format_report_table(const ClassReport& model,
                                 const ClassReport* baseline) {
  auto cell = [&](double m, double b) {
    return baseline ? two_dp(m) + " (" + two_dp(b) + ")" : two_dp(m);
  };
  auto count = [&](std::size_t m, std::size_t b) {
    return baseline ? std::to_string(m) + " (" + std::to_string(b) + ")"
                    : std::to_string(m);
  };
  const ClassReport& base = baseline ? *baseline : model;
  std::string out = "Cohort Year\tPrediction\tPrecision\tRecall\tF1-score\t#Case\n";
  const std::string year = std::to_string(model.cohort_year);
  out += year + "\tAt-risk\t" + cell(model.at_risk.precision, base.at_risk.precision) +
         "\t" + cell(model.at_risk.recall, base.at_risk.recall) + "\t" +
         cell(model.at_risk.f1, base.at_risk.f1) + "\t" +
         count(model.at_risk.support, base.at_risk.support) + "\n";
  out += "\tGraduate on time\t" +
         cell(model.on_time.precision, base.on_time.precision) + "\t" +
         cell(model.on_time.recall, base.on_time.recall) + "\t" +
         cell(model.on_time.f1, base.on_time.f1) + "\t" +
         count(model.on_time.support, base.on_time.support) + "\n";
  out += "\tWeighted Accuracy\t\t\t" + cell(model.weighted_f1, base.weighted_f1) +
         "\t" + count(model.cases(), base.cases()) + "\n";
  return out;
}

}  // namespace pathwise
