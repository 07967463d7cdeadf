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

// Case-record schema, panel container and the feature transforms that turn
// raw survey values into the matrix consumed by the tree.

#ifndef PATHWISE_DATAMODEL_HPP_
#define PATHWISE_DATAMODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace pathwise {

// Binary outcome. NoGrad4yr is the at-risk (positive) class.
enum class Outcome : std::uint8_t { kGrad4yr = 0, kNoGrad4yr = 1 };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);

enum class FeatureKind { kNumeric, kCategorical };
enum class ExpectedEffect { kPlus, kMinus, kMixed };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::vector<std::string> categories;  // categorical only
  ExpectedEffect expected_effect = ExpectedEffect::kMixed;
  char block = 'A';         // thematic block A..E
  bool is_static = true;    // blocks A-B are static, C-E vary by cohort year

  bool operator==(const FeatureSpec&) const = default;
};

class FeatureSchema {
 public:
  // Throws ValidationError on duplicate names or categoricals with fewer
  // than two categories.
  explicit FeatureSchema(std::vector<FeatureSpec> entries);

  // The 29 predictors of the program's case record, in block order.
  static FeatureSchema standard();

  static FeatureSchema from_json(const nlohmann::json& j);
  static FeatureSchema load(const std::string& path);
  nlohmann::json to_json() const;

  const std::vector<FeatureSpec>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return entries_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureSpec> entries_;
};

// A cell is missing (monostate), a finite number, or a category label.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& cell) {
  return std::holds_alternative<std::monostate>(cell);
}

struct StudentRecord {
  std::string student_id;
  int cohort_year = 1;
  std::vector<Cell> values;  // aligned with schema entries
  std::optional<Outcome> outcome;

  bool operator==(const StudentRecord&) const = default;
};

class CohortPanel {
 public:
  CohortPanel(FeatureSchema schema, std::vector<StudentRecord> records);

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<StudentRecord>& records() const { return records_; }
  std::vector<const StudentRecord*> year(int cohort_year) const;
  std::vector<const StudentRecord*> student(std::string_view student_id) const;

  bool operator==(const CohortPanel&) const = default;

 private:
  FeatureSchema schema_;
  std::vector<StudentRecord> records_;
};

// Reads a comma-delimited panel with header student_id, cohort_year, the
// schema names (any order) and an optional outcome column. Empty cells are
// missing.
CohortPanel load_panel(const std::string& path, const FeatureSchema& schema);
CohortPanel read_panel(std::istream& in, const FeatureSchema& schema);
void write_panel(std::ostream& out, const CohortPanel& panel);

// Midrank percentiles: 100 * (r - 0.5) / n over the n non-missing values.
std::vector<std::optional<double>> percentile_transform(
    std::span<const std::optional<double>> values);

// Dense row-major design matrix for one cohort year.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> column_names,
                std::vector<double> values,
                std::optional<std::vector<Outcome>> labels, int cohort_year,
                std::vector<std::string> row_ids = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return column_names_.size(); }
  double at(std::size_t row, std::size_t col) const {
    return values_[row * cols() + col];
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& column_names() const {
    return column_names_;
  }
  const std::optional<std::vector<Outcome>>& labels() const { return labels_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  int cohort_year() const { return cohort_year_; }

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::string> column_names_;
  std::vector<double> values_;
  std::optional<std::vector<Outcome>> labels_;
  int cohort_year_ = 1;
  std::vector<std::string> row_ids_;
  std::size_t rows_ = 0;
};

enum class MissingPolicy {
  kMedianIndicator,  // percentile 50 plus a <name>_missing indicator column
  kMedian,           // percentile 50 only
};

MissingPolicy parse_missing_policy(std::string_view tag);
std::string_view to_string(MissingPolicy policy);

// Percentile/one-hot encoder fitted on a reference set of records. Applying
// it to the reference set itself reproduces percentile_transform exactly;
// other records are placed with the same mid-distribution rule, so
// held-out rows never influence the statistics.
class FeatureEncoder {
 public:
  static FeatureEncoder fit(const FeatureSchema& schema,
                            std::span<const StudentRecord* const> records,
                            MissingPolicy policy);

  const std::vector<std::string>& column_names() const { return columns_; }
  std::vector<double> encode(const StudentRecord& record) const;
  FeatureMatrix transform(std::span<const StudentRecord* const> records,
                          int cohort_year) const;

  // Percentile of `value` for numeric schema entry `feature`.
  double percentile(std::size_t feature, double value) const;

  nlohmann::json to_json() const;
  static FeatureEncoder from_json(const FeatureSchema& schema,
                                  const nlohmann::json& j);

 private:
  struct NumericColumn {
    std::size_t feature = 0;
    std::vector<double> reference;  // sorted non-missing reference values
    bool missing_indicator = false;
  };

  FeatureSchema schema_{std::vector<FeatureSpec>{}};
  MissingPolicy policy_ = MissingPolicy::kMedianIndicator;
  std::vector<NumericColumn> numeric_;  // one per numeric schema entry
  std::vector<std::string> columns_;

  void build_column_names();
};

// Fits the encoder on the cohort year and applies it to the same records.
FeatureMatrix build_matrix(
    const CohortPanel& panel, int cohort_year,
    MissingPolicy policy = MissingPolicy::kMedianIndicator);

}  // namespace pathwise

#endif  // PATHWISE_DATAMODEL_HPP_
