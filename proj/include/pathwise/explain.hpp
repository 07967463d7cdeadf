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

#ifndef PATHWISE_EXPLAIN_HPP_
#define PATHWISE_EXPLAIN_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pathwise/datamodel.hpp"
#include "pathwise/llm.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/tree.hpp"

namespace pathwise {

enum class PromptVariant { kBasic, kWithKb, kZeroShot };

std::string to_string(PromptVariant v);
PromptVariant parse_prompt_variant(std::string_view text);

struct KbEntry {
  std::string title;
  std::string text;
};

struct KnowledgeBase {
  std::vector<KbEntry> best_practices;

  bool empty() const { return best_practices.empty(); }
  // One "- title: text" line per entry.
  std::string render() const;

  static KnowledgeBase from_json(const nlohmann::json& j);
  static KnowledgeBase load(const std::string& path);
  nlohmann::json to_json() const;
};

// Raw template text with {placeholders}.
std::string_view prompt_template(PromptVariant variant);

// Fills the template. A single trailing newline is stripped from each slot
// value. Throws ValidationError when the tree text is empty for a tree
// variant or the knowledge base is missing/empty for kWithKb.
std::string render_prompt(PromptVariant variant, int cohort_year,
                          std::string_view tree_text,
                          std::string_view case_data,
                          const KnowledgeBase* kb = nullptr);

// Baseline prompt without a tree. Its wording is our own: the same case
// data block and answer format as the tree prompts, nothing else.
std::string render_zero_shot(int cohort_year, std::string_view case_data);

// Case data for prompts. Numeric values are the student's within-cohort-year
// percentiles averaged over the years they were observed, up to and
// including the focal year. Categorical values come from the focal year.
class CaseDataRenderer {
 public:
  explicit CaseDataRenderer(const CohortPanel& panel);

  // "name: value" lines in schema order; numbers with one decimal,
  // absent values as "missing".
  std::string render(const std::string& student_id, int cohort_year) const;

 private:
  const CohortPanel* panel_;
  // percentiles_[year - 1][feature][student] for numeric features.
  std::vector<std::vector<std::map<std::string, double>>> percentiles_;
};

struct ParsedPrediction {
  Outcome label = Outcome::kGrad4yr;
  std::optional<double> probability;

  bool operator==(const ParsedPrediction&) const = default;
};

// First line containing "prediction:" (any case, after optional list or
// bold markers) decides. Returns nullopt when no such line names a class.
std::optional<ParsedPrediction> parse_prediction(std::string_view response);

enum class BundleStatus { kOk, kParseError, kBackendError };

std::string to_string(BundleStatus s);

struct ExplanationBundle {
  std::string bundle_id;
  std::string student_id;
  int cohort_year = 0;
  PromptVariant variant = PromptVariant::kBasic;
  std::string prompt;
  std::string backend;
  std::string response;
  std::optional<ParsedPrediction> parsed;
  Prediction model_prediction;
  BundleStatus status = BundleStatus::kOk;
  std::string error;
  std::string created_at;

  nlohmann::json to_json() const;
  static ExplanationBundle from_json(const nlohmann::json& j);
  bool operator==(const ExplanationBundle&) const = default;
};

// Deterministic id from the run seed and the case identity.
std::string make_bundle_id(std::uint64_t seed, const std::string& student_id,
                           int cohort_year, PromptVariant variant,
                           std::size_t ordinal);

std::string utc_timestamp();

struct ExplainCase {
  std::string student_id;
  int cohort_year = 0;
  std::vector<double> row;  // encoded features in the tree's column order
  std::string case_data;    // CaseDataRenderer output
};

struct ExplainOptions {
  GenerationSettings settings;
  std::uint64_t seed = 0;
  std::size_t ordinal = 0;
  std::function<std::string()> clock = utc_timestamp;
};

ExplanationBundle explain_case(const DecisionTree& tree,
                               const ExplainCase& input, PromptVariant variant,
                               LlmBackend& backend, const KnowledgeBase* kb,
                               const ExplainOptions& options = {});

// Explains every (case, variant) pair, at most `parallelism` backend calls
// in flight. Output order is cases-major, variants-minor; ordinals follow
// the same order.
std::vector<ExplanationBundle> explain_batch(
    const DecisionTree& tree, std::span<const ExplainCase> cases,
    std::span<const PromptVariant> variants, LlmBackend& backend,
    const KnowledgeBase* kb, const ExplainOptions& options,
    unsigned parallelism = 1);

// Append-only JSON Lines store with a single writer.
class BundleStore {
 public:
  static std::vector<ExplanationBundle> read(std::istream& in);
  static std::vector<ExplanationBundle> load(const std::string& path);
  static void write(std::ostream& out, std::span<const ExplanationBundle> bundles);
  static void append(const std::string& path,
                     std::span<const ExplanationBundle> bundles);
};

struct ZeroShotCase {
  std::string student_id;
  int cohort_year = 0;
  std::string case_data;
  Outcome label = Outcome::kGrad4yr;
};

struct ZeroShotOutcome {
  std::string student_id;
  std::string response;
  std::optional<Outcome> prediction;  // nullopt on backend failure
  bool unparseable = false;
  std::string error;
};

struct ZeroShotReport {
  std::vector<ZeroShotOutcome> cases;
  std::optional<ClassReport> report;  // over cases with a response
  std::size_t parsed = 0;
  std::size_t unparseable = 0;  // scored as Grad4yr
  std::size_t backend_errors = 0;  // excluded from the report

  nlohmann::json to_json() const;
};

ZeroShotReport zero_shot_evaluate(std::span<const ZeroShotCase> cases,
                                  LlmBackend& backend,
                                  const GenerationSettings& settings = {},
                                  unsigned parallelism = 1);

}  // namespace pathwise

#endif  // PATHWISE_EXPLAIN_HPP_
