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

#include "pathwise/explain.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>

#include "pathwise/error.hpp"
#include "pathwise/parallel.hpp"
#include "pathwise/rng.hpp"

namespace pathwise {
namespace {

constexpr std::string_view kBasicTemplate = R"(# Task

You are given (1) a decision-tree classifier of cohort year {cohortyear} and (2) a single observation ("case data").

1. Predict the class (with probability) for the observation by traversing the tree.

2. Tabulate the decision path – at each split, compare the rule to the observation’s value in plain language (avoid formulas).

3. Key Drivers – list the 3–5 features that most strongly pushed the prediction. For each, give a one-sentence real-world interpretation.

4. Potential Ambiguities – list any features close to a split-point or otherwise uncertain that could plausibly flip the outcome if they changed slightly; explain why.

5. Keep the explanation audience-friendly (e.g., for academic advisers rather than data scientists). Use bullet points or a table where clarity is improved.

Length guideline: ≤ 500 words.

# Input

## Decision Tree

{decision_tree}

## Case Data (Numerical values are percentiles by cohort year and averaged across all years)

{case_data}

# Output Format:

- Prediction: <Grad4yr / NoGrad4yr>

- Tabulate Predictions ...

- Key Drivers ...

- Potential Ambiguities ...

- Final Highlights for Advisers ...
)";

constexpr std::string_view kWithKbTemplate = R"(# Task

You are given (1) a decision-tree classifier of cohort year {cohortyear}, (2) a single observation ("case data"), and (3) best practices from project managers.

1. Predict the class (with probability) for the observation by traversing the tree.
2. Tabulate the decision path – at each split, compare the rule to the observation’s value in plain language (avoid formulas).
3. Key Drivers – list the 3-5 features that most strongly pushed the prediction. For each, give a one-sentence real-world interpretation.
4. Potential Ambiguities – list any features close to a split-point or otherwise uncertain that could plausibly flip the outcome if they changed slightly; explain why.
5. Keep the explanation audience-friendly (e.g., for academic advisers rather than data scientists). Use bullet points or a table where clarity is improved.

Length guideline: ≤ 500 words.

# Input

## Decision Tree
{decision_tree}

## Case Data (Numerical values are percentiles by cohort year and averaged across all years)
{case_data}

## Best Practices from the project managers
{best_practices}

# Output Format:

- Prediction: <Grad4yr / NoGrad4yr>
- Tabulate Predictions ...
- Key Drivers ...
- Potential Ambiguities ...
- Final Highlights for Advisers ...
)";

// Our own wording: the baseline sees the student record and nothing else.
constexpr std::string_view kZeroShotTemplate = R"(# Task

You are given a single observation ("case data") describing a college student in cohort year {cohortyear}. Predict whether the student will graduate within four years (Grad4yr) or not (NoGrad4yr), and state your confidence as a percentage.

# Input

## Case Data (Numerical values are percentiles by cohort year and averaged across all years)

{case_data}

# Output Format:

- Prediction: <Grad4yr / NoGrad4yr>
)";

std::string_view trim_newline(std::string_view s) {
  if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
  return s;
}

// Single left-to-right pass, so slot values are never re-expanded.
std::string fill(std::string_view tmpl,
                 const std::map<std::string, std::string_view, std::less<>>& slots) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const auto it = slots.find(tmpl.substr(i + 1, close - i - 1));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

nlohmann::json prediction_json(const Prediction& p) {
  return {{"label", to_string(p.label)},
          {"probability", p.probability},
          {"at_risk_score", p.at_risk_score}};
}

Outcome outcome_field(const nlohmann::json& j, const char* where) {
  const auto o = parse_outcome(j.get<std::string>());
  if (!o) throw ValidationError(std::string("bad outcome in ") + where);
  return *o;
}

}  // namespace

std::string to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::kBasic: return "basic";
    case PromptVariant::kWithKb: return "with_kb";
    case PromptVariant::kZeroShot: return "zero_shot";
  }
  return "basic";
}

PromptVariant parse_prompt_variant(std::string_view text) {
  if (text == "basic") return PromptVariant::kBasic;
  if (text == "with_kb") return PromptVariant::kWithKb;
  if (text == "zero_shot") return PromptVariant::kZeroShot;
  throw ValidationError("unknown prompt variant '" + std::string(text) +
                        "' (expected basic, with_kb or zero_shot)");
}

std::string KnowledgeBase::render() const {
  std::string out;
  for (const auto& e : best_practices) out += "- " + e.title + ": " + e.text + "\n";
  return out;
}

KnowledgeBase KnowledgeBase::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("best_practices") || !j["best_practices"].is_array()) {
    throw ValidationError("knowledge base needs a best_practices array", "/best_practices");
  }
  KnowledgeBase kb;
  for (std::size_t i = 0; i < j["best_practices"].size(); ++i) {
    const auto& e = j["best_practices"][i];
    const std::string ptr = "/best_practices/" + std::to_string(i);
    if (!e.is_object() || !e.contains("title") || !e.contains("text") ||
        !e["title"].is_string() || !e["text"].is_string()) {
      throw ValidationError("knowledge base entry needs string title and text", ptr);
    }
    KbEntry entry{e["title"].get<std::string>(), e["text"].get<std::string>()};
    if (entry.title.empty() || entry.text.empty()) {
      throw ValidationError("knowledge base entry has empty title or text", ptr);
    }
    kb.best_practices.push_back(std::move(entry));
  }
  return kb;
}

KnowledgeBase KnowledgeBase::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open knowledge base '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

nlohmann::json KnowledgeBase::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : best_practices) entries.push_back({{"title", e.title}, {"text", e.text}});
  return {{"best_practices", entries}};
}

std::string_view prompt_template(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::kBasic: return kBasicTemplate;
    case PromptVariant::kWithKb: return kWithKbTemplate;
    case PromptVariant::kZeroShot: return kZeroShotTemplate;
  }
  return kBasicTemplate;
}

std::string render_prompt(PromptVariant variant, int cohort_year,
                          std::string_view tree_text,
                          std::string_view case_data,
                          const KnowledgeBase* kb) {
  if (variant == PromptVariant::kZeroShot) return render_zero_shot(cohort_year, case_data);
  if (trim_newline(tree_text).empty()) {
    throw ValidationError("tree text is required for the " + to_string(variant) + " prompt");
  }
  const std::string year = std::to_string(cohort_year);
  std::string practices;
  if (variant == PromptVariant::kWithKb) {
    if (kb == nullptr || kb->empty()) {
      throw ValidationError("the with_kb prompt needs a non-empty knowledge base");
    }
    practices = kb->render();
  }
  return fill(prompt_template(variant),
              {{"cohortyear", year},
               {"decision_tree", trim_newline(tree_text)},
               {"case_data", trim_newline(case_data)},
               {"best_practices", trim_newline(practices)}});
}

std::string render_zero_shot(int cohort_year, std::string_view case_data) {
  const std::string year = std::to_string(cohort_year);
  return fill(kZeroShotTemplate,
              {{"cohortyear", year}, {"case_data", trim_newline(case_data)}});
}

CaseDataRenderer::CaseDataRenderer(const CohortPanel& panel) : panel_(&panel) {
  const auto& schema = panel.schema();
  percentiles_.resize(4);
  for (int y = 1; y <= 4; ++y) {
    auto& by_feature = percentiles_[y - 1];
    by_feature.resize(schema.size());
    const auto records = panel.year(y);
    if (records.empty()) continue;
    for (std::size_t f = 0; f < schema.size(); ++f) {
      if (schema[f].kind != FeatureKind::kNumeric) continue;
      std::vector<std::optional<double>> column;
      column.reserve(records.size());
      bool any = false;
      for (const auto* r : records) {
        const auto* v = std::get_if<double>(&r->values[f]);
        column.push_back(v ? std::optional<double>(*v) : std::nullopt);
        any = any || v != nullptr;
      }
      if (!any) continue;
      const auto pct = percentile_transform(column);
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (pct[i]) by_feature[f][records[i]->student_id] = *pct[i];
      }
    }
  }
}

std::string CaseDataRenderer::render(const std::string& student_id, int cohort_year) const {
  const auto& schema = panel_->schema();
  const auto history = panel_->student(student_id);
  const StudentRecord* focal = nullptr;
  for (const auto* r : history) {
    if (r->cohort_year == cohort_year) focal = r;
  }
  if (focal == nullptr) {
    throw ValidationError("no record for student '" + student_id + "' in cohort year " +
                          std::to_string(cohort_year));
  }
  std::string out;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    out += schema[f].name + ": ";
    if (schema[f].kind == FeatureKind::kNumeric) {
      double sum = 0.0;
      int count = 0;
      for (int y = 1; y <= cohort_year; ++y) {
        const auto& m = percentiles_[y - 1][f];
        const auto it = m.find(student_id);
        if (it != m.end()) {
          sum += it->second;
          ++count;
        }
      }
      out += count ? one_decimal(sum / count) : "missing";
    } else {
      const auto* s = std::get_if<std::string>(&focal->values[f]);
      out += s ? *s : "missing";
    }
    out += "\n";
  }
  return out;
}

std::optional<ParsedPrediction> parse_prediction(std::string_view response) {
  static const std::regex kPercent(R"((\d+(?:\.\d+)?)\s*%)");
  static const std::regex kDecimal(R"((?:^|[^\d.])((?:0?\.\d+)|1\.0+|0|1)(?![\d.%]))");
  std::size_t pos = 0;
  while (pos <= response.size()) {
    auto eol = response.find('\n', pos);
    if (eol == std::string_view::npos) eol = response.size();
    std::string line;
    for (char c : response.substr(pos, eol - pos)) {
      if (c != '*' && c != '_' && c != '`') line += c;
    }
    pos = eol + 1;
    const std::string low = lower(line);
    const auto key = low.find("prediction");
    if (key == std::string::npos) continue;
    bool prefix_ok = true;
    for (std::size_t i = 0; i < key; ++i) {
      const char c = low[i];
      if (!(std::isspace(static_cast<unsigned char>(c)) || c == '-' || c == '#' ||
            c == '>' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c)) ||
            static_cast<unsigned char>(c) >= 0x80)) {
        prefix_ok = false;
        break;
      }
    }
    std::size_t colon = key + std::string_view("prediction").size();
    while (colon < low.size() && low[colon] == ' ') ++colon;
    if (!prefix_ok || colon >= low.size() || low[colon] != ':') continue;

    const std::string rest = low.substr(colon + 1);
    bool has_no = false, has_yes = false;
    for (std::size_t at = rest.find("grad4yr"); at != std::string::npos;
         at = rest.find("grad4yr", at + 1)) {
      const bool negated = at >= 2 && rest.compare(at - 2, 2, "no") == 0;
      (negated ? has_no : has_yes) = true;
    }
    if (has_no == has_yes) return std::nullopt;  // neither, or both named
    ParsedPrediction out;
    out.label = has_no ? Outcome::kNoGrad4yr : Outcome::kGrad4yr;
    std::smatch m;
    if (std::regex_search(rest, m, kPercent)) {
      const double v = std::stod(m[1].str()) / 100.0;
      if (v >= 0.0 && v <= 1.0) out.probability = v;
    } else {
      std::string digits = rest;
      // Ignore the "4" in the class names.
      for (std::size_t at = digits.find("grad4yr"); at != std::string::npos;
           at = digits.find("grad4yr", at + 1)) {
        digits[at + 4] = ' ';
      }
      if (std::regex_search(digits, m, kDecimal)) out.probability = std::stod(m[1].str());
    }
    return out;
  }
  return std::nullopt;
}

std::string to_string(BundleStatus s) {
  switch (s) {
    case BundleStatus::kOk: return "ok";
    case BundleStatus::kParseError: return "parse_error";
    case BundleStatus::kBackendError: return "backend_error";
  }
  return "ok";
}

nlohmann::json ExplanationBundle::to_json() const {
  nlohmann::json parsed_json = nullptr;
  if (parsed) {
    parsed_json = {{"label", to_string(parsed->label)},
                   {"probability", parsed->probability ? nlohmann::json(*parsed->probability)
                                                       : nlohmann::json(nullptr)}};
  }
  return {{"bundle_id", bundle_id},
          {"student_id", student_id},
          {"cohort_year", cohort_year},
          {"variant", to_string(variant)},
          {"prompt", prompt},
          {"backend", backend},
          {"response", response},
          {"parsed", parsed_json},
          {"model_prediction", prediction_json(model_prediction)},
          {"status", to_string(status)},
          {"error", error},
          {"created_at", created_at}};
}

ExplanationBundle ExplanationBundle::from_json(const nlohmann::json& j) {
  try {
    ExplanationBundle b;
    b.bundle_id = j.at("bundle_id").get<std::string>();
    b.student_id = j.at("student_id").get<std::string>();
    b.cohort_year = j.at("cohort_year").get<int>();
    b.variant = parse_prompt_variant(j.at("variant").get<std::string>());
    b.prompt = j.at("prompt").get<std::string>();
    b.backend = j.at("backend").get<std::string>();
    b.response = j.at("response").get<std::string>();
    if (!j.at("parsed").is_null()) {
      ParsedPrediction p;
      p.label = outcome_field(j["parsed"].at("label"), "parsed.label");
      if (!j["parsed"].at("probability").is_null()) {
        p.probability = j["parsed"]["probability"].get<double>();
      }
      b.parsed = p;
    }
    const auto& mp = j.at("model_prediction");
    b.model_prediction.label = outcome_field(mp.at("label"), "model_prediction.label");
    b.model_prediction.probability = mp.at("probability").get<double>();
    b.model_prediction.at_risk_score = mp.at("at_risk_score").get<double>();
    const auto status = j.at("status").get<std::string>();
    if (status == "ok") b.status = BundleStatus::kOk;
    else if (status == "parse_error") b.status = BundleStatus::kParseError;
    else if (status == "backend_error") b.status = BundleStatus::kBackendError;
    else throw ValidationError("unknown bundle status '" + status + "'", "/status");
    b.error = j.value("error", "");
    b.created_at = j.at("created_at").get<std::string>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed bundle: ") + e.what());
  }
}

std::string make_bundle_id(std::uint64_t seed, const std::string& student_id,
                           int cohort_year, PromptVariant variant,
                           std::size_t ordinal) {
  const std::string key = std::to_string(seed) + "|" + student_id + "|" +
                          std::to_string(cohort_year) + "|" + to_string(variant) + "|" +
                          std::to_string(ordinal);
  char buf[24];
  std::snprintf(buf, sizeof buf, "b%012llx",
                static_cast<unsigned long long>(fnv1a(key) & 0xffffffffffffULL));
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ExplanationBundle explain_case(const DecisionTree& tree, const ExplainCase& input,
                               PromptVariant variant, LlmBackend& backend,
                               const KnowledgeBase* kb, const ExplainOptions& options) {
  if (variant == PromptVariant::kZeroShot) {
    throw ValidationError("explain_case takes the basic or with_kb variant");
  }
  ExplanationBundle b;
  b.bundle_id = make_bundle_id(options.seed, input.student_id, input.cohort_year, variant,
                               options.ordinal);
  b.student_id = input.student_id;
  b.cohort_year = input.cohort_year;
  b.variant = variant;
  b.prompt = render_prompt(variant, input.cohort_year, render_tree_text(tree),
                           input.case_data, kb);
  b.backend = backend.identity();
  b.model_prediction = tree.predict(input.row);
  b.created_at = options.clock ? options.clock() : std::string();
  try {
    b.response = with_retries([&] { return backend.complete(b.prompt, options.settings); },
                              options.settings);
  } catch (const BackendError& e) {
    b.status = BundleStatus::kBackendError;
    b.error = e.what();
    return b;
  }
  b.parsed = parse_prediction(b.response);
  if (!b.parsed) {
    b.status = BundleStatus::kParseError;
    b.error = "response has no parseable prediction line";
  }
  return b;
}

std::vector<ExplanationBundle> explain_batch(const DecisionTree& tree,
                                             std::span<const ExplainCase> cases,
                                             std::span<const PromptVariant> variants,
                                             LlmBackend& backend, const KnowledgeBase* kb,
                                             const ExplainOptions& options,
                                             unsigned parallelism) {
  std::vector<ExplanationBundle> out(cases.size() * variants.size());
  parallel_for(out.size(), parallelism, [&](std::size_t i) {
    ExplainOptions local = options;
    local.ordinal = i;
    out[i] = explain_case(tree, cases[i / variants.size()], variants[i % variants.size()],
                          backend, kb, local);
  });
  return out;
}

std::vector<ExplanationBundle> BundleStore::read(std::istream& in) {
  std::vector<ExplanationBundle> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ExplanationBundle::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("bundle line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("bundle line " + std::to_string(line_no) + ": " + e.what(),
                            e.pointer());
    }
  }
  return out;
}

std::vector<ExplanationBundle> BundleStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open bundle store '" + path + "'");
  return read(in);
}

void BundleStore::write(std::ostream& out, std::span<const ExplanationBundle> bundles) {
  for (const auto& b : bundles) out << b.to_json().dump() << '\n';
}

void BundleStore::append(const std::string& path, std::span<const ExplanationBundle> bundles) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw RuntimeFailure("cannot write bundle store '" + path + "'");
  write(out, bundles);
  if (!out) throw RuntimeFailure("write failed for '" + path + "'");
}

nlohmann::json ZeroShotReport::to_json() const {
  nlohmann::json j;
  j["cases"] = this->cases.size();
  j["parsed"] = parsed;
  j["unparseable_scored_as_grad4yr"] = unparseable;
  j["backend_errors_excluded"] = backend_errors;
  j["report"] = report ? report->to_json() : nlohmann::json(nullptr);
  return j;
}

ZeroShotReport zero_shot_evaluate(std::span<const ZeroShotCase> cases, LlmBackend& backend,
                                  const GenerationSettings& settings, unsigned parallelism) {
  ZeroShotReport out;
  out.cases.resize(cases.size());
  parallel_for(cases.size(), parallelism, [&](std::size_t i) {
    auto& rec = out.cases[i];
    rec.student_id = cases[i].student_id;
    const auto prompt = render_zero_shot(cases[i].cohort_year, cases[i].case_data);
    try {
      rec.response = with_retries([&] { return backend.complete(prompt, settings); }, settings);
    } catch (const BackendError& e) {
      rec.error = e.what();
      return;
    }
    const auto parsed = parse_prediction(rec.response);
    rec.unparseable = !parsed;
    rec.prediction = parsed ? parsed->label : Outcome::kGrad4yr;
  });

  std::vector<Outcome> preds, labels;
  int year = cases.empty() ? 0 : cases.front().cohort_year;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& rec = out.cases[i];
    if (!rec.prediction) {
      ++out.backend_errors;
      continue;
    }
    (rec.unparseable ? out.unparseable : out.parsed) += 1;
    preds.push_back(*rec.prediction);
    labels.push_back(cases[i].label);
    if (cases[i].cohort_year != year) year = 0;
  }
  if (!preds.empty()) out.report = class_report(preds, labels, year);
  return out;
}

}  // namespace pathwise
