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

#include "pathwise/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"

namespace pathwise {
namespace {

constexpr std::string_view kStudentId = "student_id";
constexpr std::string_view kCohortYear = "cohort_year";
constexpr std::string_view kOutcome = "outcome";

FeatureSpec numeric(std::string name, ExpectedEffect effect, char block) {
  return {std::move(name), FeatureKind::kNumeric, {}, effect, block,
          block <= 'B'};
}

FeatureSpec categorical(std::string name, std::vector<std::string> categories,
                        ExpectedEffect effect, char block) {
  return {std::move(name), FeatureKind::kCategorical, std::move(categories),
          effect, block, block <= 'B'};
}

std::string_view effect_tag(ExpectedEffect e) {
  switch (e) {
    case ExpectedEffect::kPlus:
      return "plus";
    case ExpectedEffect::kMinus:
      return "minus";
    case ExpectedEffect::kMixed:
      return "mixed";
  }
  return "mixed";
}

ExpectedEffect parse_effect(std::string_view tag) {
  if (tag == "plus" || tag == "+") return ExpectedEffect::kPlus;
  if (tag == "minus" || tag == "-") return ExpectedEffect::kMinus;
  if (tag == "mixed") return ExpectedEffect::kMixed;
  throw ValidationError("unknown expected_effect: " + std::string(tag));
}

std::optional<double> parse_number(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  return outcome == Outcome::kNoGrad4yr ? "NoGrad4yr" : "Grad4yr";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  if (text == "Grad4yr") return Outcome::kGrad4yr;
  if (text == "NoGrad4yr") return Outcome::kNoGrad4yr;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> entries)
    : entries_(std::move(entries)) {
  std::set<std::string_view> seen;
  for (const auto& e : entries_) {
    if (e.name.empty()) throw ValidationError("schema entry with empty name");
    if (e.name == kStudentId || e.name == kCohortYear || e.name == kOutcome) {
      throw ValidationError("schema entry uses reserved name: " + e.name);
    }
    if (!seen.insert(e.name).second) {
      throw ValidationError("duplicate schema entry: " + e.name);
    }
    if (e.kind == FeatureKind::kCategorical) {
      if (e.categories.size() < 2) {
        throw ValidationError("categorical '" + e.name +
                              "' needs at least two categories");
      }
      std::set<std::string_view> cats(e.categories.begin(),
                                       e.categories.end());
      if (cats.size() != e.categories.size()) {
        throw ValidationError("categorical '" + e.name +
                              "' has duplicate categories");
      }
    } else if (!e.categories.empty()) {
      throw ValidationError("numeric '" + e.name + "' must not list categories");
    }
    if (e.block < 'A' || e.block > 'E') {
      throw ValidationError("schema entry '" + e.name + "' has invalid block");
    }
  }
}

FeatureSchema FeatureSchema::standard() {
  using E = ExpectedEffect;
  const std::vector<std::string> yes_no = {"No", "Yes"};
  return FeatureSchema({
      // A. Demographic & background (static)
      categorical("gender", {"Female", "Male", "Other"}, E::kMixed, 'A'),
      categorical("scholar_ethnicity", {"Hispanic", "Not Hispanic"}, E::kMixed,
                  'A'),
      categorical("scholar_race",
                  {"Asian", "Black", "White", "Multiracial", "Other"},
                  E::kMixed, 'A'),
      categorical("citizenship", {"Citizen", "Permanent Resident", "Other"},
                  E::kPlus, 'A'),
      categorical("has_children", yes_no, E::kMinus, 'A'),
      numeric("numberotherdependents", E::kMinus, 'A'),
      // B. Pre-college academic profile (static)
      numeric("highschoolgpa_pct", E::kPlus, 'B'),
      numeric("readeracademicscore", E::kPlus, 'B'),
      numeric("readertotalscore", E::kPlus, 'B'),
      numeric("finalacademicscore", E::kPlus, 'B'),
      numeric("finaltotalscore", E::kPlus, 'B'),
      // C. Academic progress (panel)
      numeric("gpacumulativecurrent", E::kPlus, 'C'),
      numeric("hoursattempted", E::kPlus, 'C'),
      numeric("hourscompleted", E::kPlus, 'C'),
      numeric("creditsTowardsdegree", E::kPlus, 'C'),
      numeric("totalcreditsneeded", E::kMinus, 'C'),
      categorical("enrollment", {"Full Time", "Not Enrolled", "Part Time"},
                  E::kPlus, 'C'),
      categorical("changed_enrollment_type", yes_no, E::kMinus, 'C'),
      // D. Financial circumstances (panel)
      numeric("costofattendance", E::kMinus, 'D'),
      numeric("efcamount", E::kPlus, 'D'),
      numeric("grantaid", E::kPlus, 'D'),
      numeric("loanamountoffered", E::kMixed, 'D'),
      numeric("loanamountaccepted", E::kMixed, 'D'),
      numeric("totalloandebt", E::kMinus, 'D'),
      // E. Institutional context (panel)
      categorical("collegesector",
                  {"Public", "Private Nonprofit", "Private For-Profit"},
                  E::kMixed, 'E'),
      categorical("collegetype", {"2-yr", "4-yr", "Mixed"}, E::kMixed, 'E'),
      categorical("areaofstudy",
                  {"STEM", "Health", "Business", "Social Sciences",
                   "Humanities", "Education", "Undeclared"},
                  E::kMixed, 'E'),
      categorical("persistrategyoy_any", yes_no, E::kPlus, 'E'),
      categorical("persistrategyoy_ft2ft", yes_no, E::kPlus, 'E'),
  });
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    throw ValidationError("schema JSON must be an object with 'entries'");
  }
  std::vector<FeatureSpec> entries;
  try {
    for (const auto& e : j["entries"]) {
      FeatureSpec spec;
      spec.name = e.at("name").get<std::string>();
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "numeric") {
        spec.kind = FeatureKind::kNumeric;
      } else if (kind == "categorical") {
        spec.kind = FeatureKind::kCategorical;
        spec.categories = e.at("categories").get<std::vector<std::string>>();
      } else {
        throw ValidationError("unknown feature kind '" + kind + "' for " +
                              spec.name);
      }
      spec.expected_effect =
          parse_effect(e.value("expected_effect", std::string("mixed")));
      const auto block = e.value("block", std::string("A"));
      if (block.size() != 1) {
        throw ValidationError("invalid block for " + spec.name);
      }
      spec.block = block[0];
      spec.is_static = e.value("static", spec.block <= 'B');
      entries.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed schema JSON: ") + ex.what());
  }
  return FeatureSchema(std::move(entries));
}

FeatureSchema FeatureSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError("schema file is not valid JSON: " +
                          std::string(ex.what()));
  }
  return from_json(j);
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json o;
    o["name"] = e.name;
    o["kind"] = e.kind == FeatureKind::kNumeric ? "numeric" : "categorical";
    if (e.kind == FeatureKind::kCategorical) o["categories"] = e.categories;
    o["expected_effect"] = effect_tag(e.expected_effect);
    o["block"] = std::string(1, e.block);
    o["static"] = e.is_static;
    entries.push_back(std::move(o));
  }
  return {{"entries", std::move(entries)}};
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CohortPanel and delimited I/O

CohortPanel::CohortPanel(FeatureSchema schema,
                         std::vector<StudentRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
  std::set<std::pair<std::string_view, int>> keys;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const std::string where = "record " + std::to_string(i) + " (" +
                              r.student_id + ", year " +
                              std::to_string(r.cohort_year) + ")";
    if (r.cohort_year < 1 || r.cohort_year > 4) {
      throw ValidationError(where + ": cohort_year must be in 1..4");
    }
    if (!keys.emplace(r.student_id, r.cohort_year).second) {
      throw ValidationError(where + ": duplicate (student_id, cohort_year)");
    }
    if (r.values.size() != schema_.size()) {
      throw ValidationError(where + ": value count does not match schema");
    }
    for (std::size_t f = 0; f < schema_.size(); ++f) {
      const auto& spec = schema_[f];
      const Cell& cell = r.values[f];
      if (is_missing(cell)) continue;
      if (spec.kind == FeatureKind::kNumeric) {
        const double* v = std::get_if<double>(&cell);
        if (v == nullptr || !std::isfinite(*v)) {
          throw ValidationError(where + ": '" + spec.name +
                                "' must be a finite number");
        }
      } else {
        const auto* s = std::get_if<std::string>(&cell);
        if (s == nullptr || std::find(spec.categories.begin(),
                                      spec.categories.end(),
                                      *s) == spec.categories.end()) {
          throw ValidationError(where + ": value outside categorical domain of '" +
                                spec.name + "'");
        }
      }
    }
  }
}

std::vector<const StudentRecord*> CohortPanel::year(int cohort_year) const {
  std::vector<const StudentRecord*> out;
  for (const auto& r : records_) {
    if (r.cohort_year == cohort_year) out.push_back(&r);
  }
  return out;
}

std::vector<const StudentRecord*> CohortPanel::student(
    std::string_view student_id) const {
  std::vector<const StudentRecord*> out;
  for (const auto& r : records_) {
    if (r.student_id == student_id) out.push_back(&r);
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
    return a->cohort_year < b->cohort_year;
  });
  return out;
}

CohortPanel read_panel(std::istream& in, const FeatureSchema& schema) {
  const csv::Table table = csv::read(in);

  std::optional<std::size_t> id_col, year_col, outcome_col;
  std::vector<std::optional<std::size_t>> feature_col(schema.size());
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    std::optional<std::size_t>* slot = nullptr;
    if (name == kStudentId) {
      slot = &id_col;
    } else if (name == kCohortYear) {
      slot = &year_col;
    } else if (name == kOutcome) {
      slot = &outcome_col;
    } else if (auto f = schema.index_of(name)) {
      slot = &feature_col[*f];
    } else {
      throw ValidationError("unknown column '" + name + "'", "/" + name);
    }
    if (slot->has_value()) {
      throw ValidationError("duplicate column '" + name + "'", "/" + name);
    }
    *slot = c;
  }
  if (!id_col) throw ValidationError("missing column 'student_id'");
  if (!year_col) throw ValidationError("missing column 'cohort_year'");
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (!feature_col[f]) {
      throw ValidationError("missing column '" + schema[f].name + "'");
    }
  }

  std::vector<StudentRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "row " + std::to_string(i + 1) + " (line " +
                              std::to_string(table.line_numbers[i]) + ")";
    StudentRecord rec;
    rec.student_id = row[*id_col];
    if (rec.student_id.empty()) {
      throw ValidationError(where + ": empty student_id");
    }
    const auto year = parse_number(row[*year_col]);
    if (!year || *year != std::floor(*year) || *year < 1 || *year > 4) {
      throw ValidationError(where + ": cohort_year must be an integer in 1..4");
    }
    rec.cohort_year = static_cast<int>(*year);
    if (outcome_col && !row[*outcome_col].empty()) {
      rec.outcome = parse_outcome(row[*outcome_col]);
      if (!rec.outcome) {
        throw ValidationError(where + ": outcome must be Grad4yr or NoGrad4yr");
      }
    }
    rec.values.resize(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const std::string& text = row[*feature_col[f]];
      if (text.empty()) continue;
      const auto& spec = schema[f];
      if (spec.kind == FeatureKind::kNumeric) {
        const auto v = parse_number(text);
        if (!v) {
          throw ValidationError(where + ": non-numeric value '" + text +
                                    "' in column '" + spec.name + "'",
                                "/" + spec.name);
        }
        rec.values[f] = *v;
      } else {
        if (std::find(spec.categories.begin(), spec.categories.end(), text) ==
            spec.categories.end()) {
          throw ValidationError(where + ": value '" + text +
                                    "' outside categorical domain of '" +
                                    spec.name + "'",
                                "/" + spec.name);
        }
        rec.values[f] = text;
      }
    }
    records.push_back(std::move(rec));
  }

  std::set<std::pair<std::string, int>> keys;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!keys.emplace(records[i].student_id, records[i].cohort_year).second) {
      throw ValidationError("row " + std::to_string(i + 1) +
                            ": duplicate (student_id, cohort_year) (" +
                            records[i].student_id + ", " +
                            std::to_string(records[i].cohort_year) + ")");
    }
  }
  return CohortPanel(schema, std::move(records));
}

CohortPanel load_panel(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel file: " + path);
  return read_panel(in, schema);
}

void write_panel(std::ostream& out, const CohortPanel& panel) {
  const auto& schema = panel.schema();
  std::vector<std::string> header = {std::string(kStudentId),
                                     std::string(kCohortYear)};
  for (const auto& e : schema.entries()) header.push_back(e.name);
  header.emplace_back(kOutcome);
  csv::write_row(out, header);
  std::vector<std::string> fields;
  for (const auto& r : panel.records()) {
    fields.clear();
    fields.push_back(r.student_id);
    fields.push_back(std::to_string(r.cohort_year));
    for (const auto& cell : r.values) {
      if (const auto* d = std::get_if<double>(&cell)) {
        fields.push_back(format_number(*d));
      } else if (const auto* s = std::get_if<std::string>(&cell)) {
        fields.push_back(*s);
      } else {
        fields.emplace_back();
      }
    }
    fields.emplace_back(r.outcome ? to_string(*r.outcome) : "");
    csv::write_row(out, fields);
  }
}

// ---------------------------------------------------------------------------
// Transforms

std::vector<std::optional<double>> percentile_transform(
    std::span<const std::optional<double>> values) {
  std::vector<double> present;
  for (const auto& v : values) {
    if (v) present.push_back(*v);
  }
  if (present.empty()) {
    throw ValidationError("percentile_transform: column has no values");
  }
  std::sort(present.begin(), present.end());
  const double n = static_cast<double>(present.size());
  std::vector<std::optional<double>> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    const auto lo = std::lower_bound(present.begin(), present.end(), *values[i]);
    const auto hi = std::upper_bound(lo, present.end(), *values[i]);
    // midrank r = less + (equal + 1) / 2, so r - 0.5 = less + equal / 2
    const double less = static_cast<double>(lo - present.begin());
    const double equal = static_cast<double>(hi - lo);
    out[i] = 100.0 * (less + 0.5 * equal) / n;
  }
  return out;
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> column_names,
                             std::vector<double> values,
                             std::optional<std::vector<Outcome>> labels,
                             int cohort_year, std::vector<std::string> row_ids)
    : column_names_(std::move(column_names)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      cohort_year_(cohort_year),
      row_ids_(std::move(row_ids)) {
  if (column_names_.empty()) {
    if (!values_.empty()) {
      throw ValidationError("feature matrix has values but no columns");
    }
    rows_ = labels_ ? labels_->size() : 0;
  } else {
    if (values_.size() % column_names_.size() != 0) {
      throw ValidationError("feature matrix values are not a whole number of rows");
    }
    rows_ = values_.size() / column_names_.size();
  }
  if (labels_ && labels_->size() != rows_) {
    throw ValidationError("label count does not match row count");
  }
  if (!row_ids_.empty() && row_ids_.size() != rows_) {
    throw ValidationError("row id count does not match row count");
  }
}

FeatureMatrix FeatureMatrix::select_rows(
    std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * cols());
  std::optional<std::vector<Outcome>> labels;
  if (labels_) labels.emplace();
  std::vector<std::string> ids;
  for (std::size_t i : indices) {
    if (i >= rows_) throw ValidationError("row index out of range");
    const auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (labels) labels->push_back((*labels_)[i]);
    if (!row_ids_.empty()) ids.push_back(row_ids_[i]);
  }
  FeatureMatrix out(column_names_, std::move(values), std::move(labels),
                    cohort_year_, std::move(ids));
  out.rows_ = indices.size();
  return out;
}

MissingPolicy parse_missing_policy(std::string_view tag) {
  if (tag == "median_indicator") return MissingPolicy::kMedianIndicator;
  if (tag == "median") return MissingPolicy::kMedian;
  throw ValidationError("unknown missing policy: " + std::string(tag));
}

std::string_view to_string(MissingPolicy policy) {
  return policy == MissingPolicy::kMedian ? "median" : "median_indicator";
}

FeatureEncoder FeatureEncoder::fit(const FeatureSchema& schema,
                                   std::span<const StudentRecord* const> records,
                                   MissingPolicy policy) {
  FeatureEncoder enc;
  enc.schema_ = schema;
  enc.policy_ = policy;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (schema[f].kind != FeatureKind::kNumeric) continue;
    NumericColumn col;
    col.feature = f;
    bool any_missing = false;
    for (const auto* r : records) {
      if (const auto* v = std::get_if<double>(&r->values[f])) {
        col.reference.push_back(*v);
      } else {
        any_missing = true;
      }
    }
    std::sort(col.reference.begin(), col.reference.end());
    col.missing_indicator =
        any_missing && policy == MissingPolicy::kMedianIndicator;
    enc.numeric_.push_back(std::move(col));
  }
  enc.build_column_names();
  return enc;
}

void FeatureEncoder::build_column_names() {
  columns_.clear();
  std::size_t next_numeric = 0;
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto& spec = schema_[f];
    if (spec.kind == FeatureKind::kNumeric) {
      columns_.push_back(spec.name);
      if (numeric_[next_numeric++].missing_indicator) {
        columns_.push_back(spec.name + "_missing");
      }
    } else {
      for (const auto& c : spec.categories) {
        columns_.push_back(spec.name + "=" + c);
      }
    }
  }
}

double FeatureEncoder::percentile(std::size_t feature, double value) const {
  for (const auto& col : numeric_) {
    if (col.feature != feature) continue;
    // With no reference values every observation sits at the median.
    if (col.reference.empty()) return 50.0;
    const auto lo =
        std::lower_bound(col.reference.begin(), col.reference.end(), value);
    const auto hi = std::upper_bound(lo, col.reference.end(), value);
    const double less = static_cast<double>(lo - col.reference.begin());
    const double equal = static_cast<double>(hi - lo);
    return 100.0 * (less + 0.5 * equal) /
           static_cast<double>(col.reference.size());
  }
  throw ValidationError("feature index is not a numeric schema entry");
}

std::vector<double> FeatureEncoder::encode(const StudentRecord& record) const {
  if (record.values.size() != schema_.size()) {
    throw ValidationError("record does not match encoder schema");
  }
  std::vector<double> out;
  out.reserve(columns_.size());
  std::size_t next_numeric = 0;
  for (std::size_t f = 0; f < schema_.size(); ++f) {
    const auto& spec = schema_[f];
    const Cell& cell = record.values[f];
    if (spec.kind == FeatureKind::kNumeric) {
      const auto& col = numeric_[next_numeric++];
      const auto* v = std::get_if<double>(&cell);
      out.push_back(v ? percentile(f, *v) : 50.0);
      if (col.missing_indicator) out.push_back(v ? 0.0 : 1.0);
    } else {
      const auto* s = std::get_if<std::string>(&cell);
      for (const auto& c : spec.categories) {
        out.push_back(s != nullptr && *s == c ? 1.0 : 0.0);
      }
    }
  }
  return out;
}

FeatureMatrix FeatureEncoder::transform(
    std::span<const StudentRecord* const> records, int cohort_year) const {
  std::vector<double> values;
  values.reserve(records.size() * columns_.size());
  std::vector<Outcome> labels;
  bool all_labelled = true;
  std::vector<std::string> ids;
  for (const auto* r : records) {
    const auto row = encode(*r);
    values.insert(values.end(), row.begin(), row.end());
    ids.push_back(r->student_id);
    if (r->outcome) {
      labels.push_back(*r->outcome);
    } else {
      all_labelled = false;
    }
  }
  std::optional<std::vector<Outcome>> maybe_labels;
  if (all_labelled && !records.empty()) maybe_labels = std::move(labels);
  return FeatureMatrix(columns_, std::move(values), std::move(maybe_labels),
                       cohort_year, std::move(ids));
}

nlohmann::json FeatureEncoder::to_json() const {
  nlohmann::json numeric = nlohmann::json::array();
  for (const auto& col : numeric_) {
    numeric.push_back({{"feature", schema_[col.feature].name},
                       {"reference", col.reference},
                       {"missing_indicator", col.missing_indicator}});
  }
  return {{"policy", std::string(to_string(policy_))},
          {"numeric", std::move(numeric)},
          {"columns", columns_}};
}

FeatureEncoder FeatureEncoder::from_json(const FeatureSchema& schema,
                                         const nlohmann::json& j) {
  FeatureEncoder enc;
  enc.schema_ = schema;
  try {
    enc.policy_ = parse_missing_policy(j.at("policy").get<std::string>());
    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& n : j.at("numeric")) {
      by_name[n.at("feature").get<std::string>()] = &n;
    }
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (schema[f].kind != FeatureKind::kNumeric) continue;
      const auto it = by_name.find(schema[f].name);
      if (it == by_name.end()) {
        throw ValidationError("encoder lacks numeric feature " + schema[f].name);
      }
      NumericColumn col;
      col.feature = f;
      col.reference = it->second->at("reference").get<std::vector<double>>();
      col.missing_indicator = it->second->at("missing_indicator").get<bool>();
      if (!std::is_sorted(col.reference.begin(), col.reference.end())) {
        throw ValidationError("encoder reference values are not sorted");
      }
      enc.numeric_.push_back(std::move(col));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed encoder JSON: ") + ex.what());
  }
  enc.build_column_names();
  if (j.contains("columns") &&
      j["columns"].get<std::vector<std::string>>() != enc.columns_) {
    throw ValidationError("encoder columns do not match the schema");
  }
  return enc;
}

FeatureMatrix build_matrix(const CohortPanel& panel, int cohort_year,
                           MissingPolicy policy) {
  if (cohort_year < 1 || cohort_year > 4) {
    throw ValidationError("cohort_year must be in 1..4");
  }
  const auto records = panel.year(cohort_year);
  if (records.empty()) {
    throw ValidationError("no records for cohort year " +
                          std::to_string(cohort_year));
  }
  const auto encoder = FeatureEncoder::fit(panel.schema(), records, policy);
  return encoder.transform(records, cohort_year);
}

}  // namespace pathwise
