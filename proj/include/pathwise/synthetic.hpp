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

// Synthetic cohorts with planted decision rules and realistic marginals.
// Used for verification and demos; no real records.

#ifndef PATHWISE_SYNTHETIC_HPP_
#define PATHWISE_SYNTHETIC_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pathwise/datamodel.hpp"

namespace pathwise {

enum class Comparison { kLessEqual, kGreater, kEquals, kNotEquals };

// One literal of a planted rule. Numeric features compare against a raw
// threshold, categoricals against a label. A missing value never satisfies
// a condition.
struct Condition {
  std::string feature;
  Comparison op = Comparison::kLessEqual;
  std::variant<double, std::string> value;
};

// A case is at risk (NoGrad4yr) when any conjunction holds.
using Conjunction = std::vector<Condition>;

struct SyntheticConfig {
  std::size_t n_cases = 1000;     // students
  double positive_share = 0.75;   // realized Grad4yr share after noise
  std::vector<Conjunction> planted_rules;
  double label_noise = 0.0;
  std::map<std::string, double> missing_rate;
  std::uint64_t seed = 0;
  int years = 1;                  // cohort years 1..years per student

  // Throws ValidationError when the config is inconsistent with `schema`.
  void validate(const FeatureSchema& schema) const;

  static SyntheticConfig from_json(const nlohmann::json& j);
  static SyntheticConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

// True when the planted rules mark `record` at risk.
bool planted_rule_fires(const std::vector<Conjunction>& rules,
                        const FeatureSchema& schema,
                        const StudentRecord& record);

// Labels are assigned per student from the year-1 record: the planted rule
// is evaluated there and then flipped with probability label_noise. Later
// years carry monotone transforms of the same latent draws, so the rule's
// ordering is preserved.
CohortPanel generate_synthetic(const SyntheticConfig& config,
                               const FeatureSchema& schema);

}  // namespace pathwise

#endif  // PATHWISE_SYNTHETIC_HPP_
