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

#ifndef PATHWISE_USABILITY_HPP_
#define PATHWISE_USABILITY_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pathwise/error.hpp"
#include "pathwise/explain.hpp"

namespace pathwise {

enum class Dimension {
  kUtility,
  kPrecision,
  kCompleteness,
  kTimeSaved,
  kClarity,
  kTrust,
  kFairness,
  kNoHarm,
};

inline constexpr std::size_t kDimensionCount = 8;
inline constexpr std::array<Dimension, kDimensionCount> kDimensions = {
    Dimension::kUtility,  Dimension::kPrecision, Dimension::kCompleteness,
    Dimension::kTimeSaved, Dimension::kClarity,  Dimension::kTrust,
    Dimension::kFairness, Dimension::kNoHarm};

std::string_view to_string(Dimension d);
// Accepts "TimeSaved", "Time Saved", "time_saved" and similar spellings.
std::optional<Dimension> parse_dimension(std::string_view text);

class UnknownBundleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateRatingError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct RatingRecord {
  std::string rating_id;
  std::string bundle_id;
  std::string rater_id;
  std::array<int, kDimensionCount> scores{};  // indexed like kDimensions
  std::optional<std::string> comment;
  std::string submitted_at;

  int score(Dimension d) const { return scores[static_cast<std::size_t>(d)]; }

  nlohmann::json to_json() const;
  // Validates every field; errors carry pointers such as "/scores/Clarity".
  // rating_id and submitted_at may be absent (the store fills them in).
  static RatingRecord from_json(const nlohmann::json& j);
  bool operator==(const RatingRecord&) const = default;
};

// Scoring-sheet CSV: ID (bundle id), the eight dimensions, rater and an
// optional comment column. Header names ignore case and spaces.
std::vector<RatingRecord> read_ratings_csv(std::istream& in);
std::vector<RatingRecord> load_ratings_csv(const std::string& path);

// JSON Lines store. Thread-safe; writes are serialized.
class RatingStore {
 public:
  // Loads `path` if it exists. An empty path keeps the store in memory.
  RatingStore(std::string path, std::set<std::string> known_bundles);

  // Checks the bundle id and (bundle, rater) uniqueness, assigns rating_id
  // and submitted_at when empty, persists, and returns the stored record.
  RatingRecord add(RatingRecord record);

  std::vector<RatingRecord> snapshot() const;
  bool has(const std::string& bundle_id, const std::string& rater_id) const;

 private:
  std::string path_;
  std::set<std::string> known_;
  mutable std::mutex mu_;
  std::vector<RatingRecord> records_;
  std::set<std::pair<std::string, std::string>> keys_;
};

struct SessionItem {
  std::string bundle_id;
  PromptVariant variant = PromptVariant::kBasic;
  std::string student_id;
  int cohort_year = 0;
};

struct AssessmentSession {
  std::string session_id;
  std::vector<SessionItem> items;
  std::vector<std::string> raters;
  bool blinded = true;

  // Every ok bundle becomes an item; every rater reviews every item.
  static AssessmentSession create(std::span<const ExplanationBundle> bundles,
                                  std::vector<std::string> raters,
                                  std::string session_id);

  const SessionItem* find(const std::string& bundle_id) const;
  std::set<std::string> bundle_ids() const;

  // Items in the order rater `rater` sees them: a per-rater shuffle.
  std::vector<const SessionItem*> order_for(const std::string& rater) const;

  nlohmann::json to_json() const;  // full record, variants included
  static AssessmentSession from_json(const nlohmann::json& j);
  static AssessmentSession load(const std::string& path);
};

// Rater-facing views. Neither carries the variant or knowledge-base text.
nlohmann::json blinded_session_view(const AssessmentSession& session);
nlohmann::json blinded_bundle_view(const ExplanationBundle& bundle,
                                   const KnowledgeBase* kb);

// Lines under the "## Case Data" heading of a rendered prompt.
std::string case_summary_from_prompt(std::string_view prompt);

// Replaces every knowledge-base entry text (and its rendered line) in
// `text` with "[redacted]".
std::string redact_kb(std::string text, const KnowledgeBase* kb);

// True when `payload` has no "variant" key at any depth, no string equal to
// a variant tag, and no knowledge-base entry text.
bool is_blind(const nlohmann::json& payload, const KnowledgeBase* kb);

struct DimensionSummary {
  Dimension dimension = Dimension::kUtility;
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1); 0 when n == 1
  std::size_t n = 0;

  // "Mean = 3.66, SD = 0.72"
  std::string format() const;
};

std::vector<DimensionSummary> summarize(std::span<const RatingRecord> ratings);
void write_summary_csv(std::ostream& out, std::span<const DimensionSummary> rows);
nlohmann::json summary_json(std::span<const DimensionSummary> rows);

struct RegressionObs {
  double y = 0.0;
  bool kb = false;
  std::string rater;
  std::string case_id;
  int cohort_year = 0;
  std::string cluster;  // defaults to rater when empty
};

struct RegressionOptions {
  bool rater_effects = true;
  bool case_effects = true;
  bool year_effects = true;
  double confidence = 0.90;
  std::size_t few_clusters = 10;  // warn below this many clusters
};

struct RegressionResult {
  std::string dimension;
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  std::size_t clusters = 0;
  std::size_t df = 0;
  std::size_t parameters = 0;
  std::vector<std::string> columns;          // design matrix, kb last
  std::vector<double> coefficients;          // aligned with columns
  std::vector<std::string> fixed_effects;    // dummy columns kept
  std::vector<std::string> dropped_columns;  // collinear dummies removed
  std::string warning;

  nlohmann::json to_json() const;
};

// OLS of y on an intercept, the kb indicator and dummy-coded fixed effects,
// with CR1 cluster-robust standard errors and df = clusters - 1.
RegressionResult fe_regression(std::span<const RegressionObs> obs,
                               const RegressionOptions& options = {});

// Joins ratings to the session and runs one regression per dimension.
std::vector<RegressionResult> analyze_ratings(std::span<const RatingRecord> ratings,
                                              const AssessmentSession& session,
                                              const RegressionOptions& options = {});

}  // namespace pathwise

#endif  // PATHWISE_USABILITY_HPP_
