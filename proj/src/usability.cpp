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

#include "pathwise/usability.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "pathwise/csv.hpp"
#include "pathwise/rng.hpp"

namespace pathwise {
namespace {

std::string normalize_key(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string ptr(Dimension d) { return "/scores/" + std::string(to_string(d)); }

void check_score(const nlohmann::json& v, Dimension d) {
  if (!v.is_number_integer()) {
    throw ValidationError("score for " + std::string(to_string(d)) + " must be an integer 1-5",
                          ptr(d));
  }
  const auto s = v.get<long long>();
  if (s < 1 || s > 5) {
    throw ValidationError("score for " + std::string(to_string(d)) + " is " +
                              std::to_string(s) + ", outside 1-5",
                          ptr(d));
  }
}

const nlohmann::json& required_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
    throw ValidationError(std::string(key) + " must be a non-empty string", std::string("/") + key);
  }
  return j[key];
}

std::string format_id(char prefix, std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, n);
  return buf;
}

}  // namespace

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::kUtility: return "Utility";
    case Dimension::kPrecision: return "Precision";
    case Dimension::kCompleteness: return "Completeness";
    case Dimension::kTimeSaved: return "TimeSaved";
    case Dimension::kClarity: return "Clarity";
    case Dimension::kTrust: return "Trust";
    case Dimension::kFairness: return "Fairness";
    case Dimension::kNoHarm: return "NoHarm";
  }
  return "Utility";
}

std::optional<Dimension> parse_dimension(std::string_view text) {
  const auto key = normalize_key(text);
  for (auto d : kDimensions) {
    if (normalize_key(to_string(d)) == key) return d;
  }
  return std::nullopt;
}

nlohmann::json RatingRecord::to_json() const {
  nlohmann::json s = nlohmann::json::object();
  for (auto d : kDimensions) s[std::string(to_string(d))] = score(d);
  return {{"rating_id", rating_id},
          {"bundle_id", bundle_id},
          {"rater_id", rater_id},
          {"scores", s},
          {"comment", comment ? nlohmann::json(*comment) : nlohmann::json(nullptr)},
          {"submitted_at", submitted_at}};
}

RatingRecord RatingRecord::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("rating must be a JSON object", "");
  static const std::set<std::string> kKeys = {"rating_id", "bundle_id", "rater_id",
                                              "scores",    "comment",   "submitted_at"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ValidationError("unexpected field '" + key + "'", "/" + key);
  }
  RatingRecord r;
  r.bundle_id = required_string(j, "bundle_id").get<std::string>();
  r.rater_id = required_string(j, "rater_id").get<std::string>();
  if (!j.contains("scores") || !j["scores"].is_object()) {
    throw ValidationError("scores must be an object with all eight dimensions", "/scores");
  }
  const auto& scores = j["scores"];
  for (const auto& [key, value] : scores.items()) {
    const auto d = parse_dimension(key);
    if (!d || to_string(*d) != key) {
      throw ValidationError("unknown dimension '" + key + "'", "/scores/" + key);
    }
  }
  for (auto d : kDimensions) {
    const std::string name(to_string(d));
    if (!scores.contains(name)) throw ValidationError("missing score for " + name, ptr(d));
    check_score(scores[name], d);
    r.scores[static_cast<std::size_t>(d)] = scores[name].get<int>();
  }
  if (j.contains("comment") && !j["comment"].is_null()) {
    if (!j["comment"].is_string()) throw ValidationError("comment must be a string", "/comment");
    r.comment = j["comment"].get<std::string>();
  }
  for (const char* key : {"rating_id", "submitted_at"}) {
    if (j.contains(key) && !j[key].is_string()) {
      throw ValidationError(std::string(key) + " must be a string", std::string("/") + key);
    }
  }
  r.rating_id = j.value("rating_id", "");
  r.submitted_at = j.value("submitted_at", "");
  return r;
}

std::vector<RatingRecord> read_ratings_csv(std::istream& in) {
  const auto table = csv::read(in);
  std::optional<std::size_t> id_col, rater_col, comment_col;
  std::array<std::optional<std::size_t>, kDimensionCount> dim_col;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto key = normalize_key(table.header[c]);
    if (key == "id" || key == "bundleid") {
      id_col = c;
    } else if (key == "rater" || key == "raterid") {
      rater_col = c;
    } else if (key == "comment") {
      comment_col = c;
    } else if (const auto d = parse_dimension(table.header[c])) {
      dim_col[static_cast<std::size_t>(*d)] = c;
    } else {
      throw ValidationError("unknown ratings column '" + table.header[c] + "'",
                            "/" + table.header[c]);
    }
  }
  if (!id_col) throw ValidationError("ratings file needs an ID column", "/ID");
  if (!rater_col) throw ValidationError("ratings file needs a rater column", "/rater");
  for (auto d : kDimensions) {
    if (!dim_col[static_cast<std::size_t>(d)]) {
      throw ValidationError("ratings file lacks the " + std::string(to_string(d)) + " column",
                            ptr(d));
    }
  }
  std::vector<RatingRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "ratings row " + std::to_string(i + 1) + " (line " +
                              std::to_string(table.line_numbers[i]) + ")";
    nlohmann::json j = {{"bundle_id", row[*id_col]}, {"rater_id", row[*rater_col]}};
    nlohmann::json scores = nlohmann::json::object();
    for (auto d : kDimensions) {
      const auto& text = row[*dim_col[static_cast<std::size_t>(d)]];
      char* end = nullptr;
      const long v = std::strtol(text.c_str(), &end, 10);
      if (text.empty() || *end != '\0') {
        throw ValidationError(where + ": score for " + std::string(to_string(d)) +
                                  " is not an integer",
                              ptr(d));
      }
      scores[std::string(to_string(d))] = v;
    }
    j["scores"] = scores;
    if (comment_col && !row[*comment_col].empty()) j["comment"] = row[*comment_col];
    try {
      out.push_back(RatingRecord::from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what(), e.pointer());
    }
  }
  return out;
}

std::vector<RatingRecord> load_ratings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open ratings file '" + path + "'");
  return read_ratings_csv(in);
}

RatingStore::RatingStore(std::string path, std::set<std::string> known_bundles)
    : path_(std::move(path)), known_(std::move(known_bundles)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  if (!in) throw RuntimeFailure("cannot open rating store '" + path_ + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto r = RatingRecord::from_json(nlohmann::json::parse(line));
      keys_.insert({r.bundle_id, r.rater_id});
      records_.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ValidationError(path_ + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

RatingRecord RatingStore::add(RatingRecord record) {
  std::lock_guard lock(mu_);
  if (!known_.count(record.bundle_id)) {
    throw UnknownBundleError("unknown bundle '" + record.bundle_id + "'", "/bundle_id");
  }
  if (keys_.count({record.bundle_id, record.rater_id})) {
    throw DuplicateRatingError("rater '" + record.rater_id + "' already rated bundle '" +
                                   record.bundle_id + "'",
                               "/bundle_id");
  }
  if (record.rating_id.empty()) record.rating_id = format_id('r', records_.size() + 1);
  if (record.submitted_at.empty()) record.submitted_at = utc_timestamp();
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    out << record.to_json().dump() << '\n';
    out.flush();
    if (!out) throw RuntimeFailure("cannot append to rating store '" + path_ + "'");
  }
  keys_.insert({record.bundle_id, record.rater_id});
  records_.push_back(record);
  return record;
}

std::vector<RatingRecord> RatingStore::snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

bool RatingStore::has(const std::string& bundle_id, const std::string& rater_id) const {
  std::lock_guard lock(mu_);
  return keys_.count({bundle_id, rater_id}) > 0;
}

AssessmentSession AssessmentSession::create(std::span<const ExplanationBundle> bundles,
                                            std::vector<std::string> raters,
                                            std::string session_id) {
  if (raters.empty()) throw ValidationError("a session needs at least one rater");
  std::set<std::string> unique(raters.begin(), raters.end());
  if (unique.size() != raters.size()) throw ValidationError("rater ids must be unique");
  AssessmentSession s;
  s.session_id = std::move(session_id);
  s.raters = std::move(raters);
  for (const auto& b : bundles) {
    if (b.status != BundleStatus::kOk || b.variant == PromptVariant::kZeroShot) continue;
    s.items.push_back({b.bundle_id, b.variant, b.student_id, b.cohort_year});
  }
  if (s.items.empty()) throw ValidationError("no usable bundles for the session");
  return s;
}

const SessionItem* AssessmentSession::find(const std::string& bundle_id) const {
  for (const auto& item : items) {
    if (item.bundle_id == bundle_id) return &item;
  }
  return nullptr;
}

std::set<std::string> AssessmentSession::bundle_ids() const {
  std::set<std::string> out;
  for (const auto& item : items) out.insert(item.bundle_id);
  return out;
}

std::vector<const SessionItem*> AssessmentSession::order_for(const std::string& rater) const {
  std::vector<const SessionItem*> out;
  for (const auto& item : items) out.push_back(&item);
  Rng rng(fnv1a(session_id + "|" + rater));
  rng.shuffle(std::span<const SessionItem*>(out));
  return out;
}

nlohmann::json AssessmentSession::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& item : items) {
    list.push_back({{"bundle_id", item.bundle_id},
                    {"variant", to_string(item.variant)},
                    {"student_id", item.student_id},
                    {"cohort_year", item.cohort_year}});
  }
  return {{"session_id", session_id}, {"raters", raters}, {"blinded", blinded}, {"items", list}};
}

AssessmentSession AssessmentSession::from_json(const nlohmann::json& j) {
  try {
    AssessmentSession s;
    s.session_id = j.at("session_id").get<std::string>();
    s.raters = j.at("raters").get<std::vector<std::string>>();
    s.blinded = j.value("blinded", true);
    for (const auto& item : j.at("items")) {
      s.items.push_back({item.at("bundle_id").get<std::string>(),
                         parse_prompt_variant(item.at("variant").get<std::string>()),
                         item.at("student_id").get<std::string>(),
                         item.at("cohort_year").get<int>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed session: ") + e.what());
  }
}

AssessmentSession AssessmentSession::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open session '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

nlohmann::json blinded_session_view(const AssessmentSession& session) {
  return {{"session_id", session.session_id},
          {"raters", session.raters},
          {"blinded", session.blinded},
          {"item_count", session.items.size()},
          {"dimensions", [] {
             nlohmann::json d = nlohmann::json::array();
             for (auto dim : kDimensions) d.push_back(std::string(to_string(dim)));
             return d;
           }()}};
}

std::string case_summary_from_prompt(std::string_view prompt) {
  const auto head = prompt.find("## Case Data");
  if (head == std::string_view::npos) return {};
  auto pos = prompt.find('\n', head);
  if (pos == std::string_view::npos) return {};
  ++pos;
  while (pos < prompt.size() && prompt[pos] == '\n') ++pos;
  const auto end = prompt.find("\n\n", pos);
  std::string out(prompt.substr(pos, end == std::string_view::npos ? end : end - pos));
  if (!out.empty()) out += '\n';
  return out;
}

std::string redact_kb(std::string text, const KnowledgeBase* kb) {
  if (kb == nullptr) return text;
  for (const auto& e : kb->best_practices) {
    for (auto at = text.find(e.text); at != std::string::npos; at = text.find(e.text, at)) {
      text.replace(at, e.text.size(), "[redacted]");
    }
  }
  return text;
}

nlohmann::json blinded_bundle_view(const ExplanationBundle& bundle, const KnowledgeBase* kb) {
  return {{"bundle_id", bundle.bundle_id},
          {"case_id", bundle.student_id},
          {"cohort_year", bundle.cohort_year},
          {"case_summary", case_summary_from_prompt(bundle.prompt)},
          {"explanation", redact_kb(bundle.response, kb)}};
}

bool is_blind(const nlohmann::json& payload, const KnowledgeBase* kb) {
  if (payload.is_object()) {
    for (const auto& [key, value] : payload.items()) {
      if (normalize_key(key) == "variant" || !is_blind(value, kb)) return false;
    }
    return true;
  }
  if (payload.is_array()) {
    return std::all_of(payload.begin(), payload.end(),
                       [&](const nlohmann::json& v) { return is_blind(v, kb); });
  }
  if (payload.is_string()) {
    const auto& s = payload.get_ref<const std::string&>();
    for (auto v : {PromptVariant::kBasic, PromptVariant::kWithKb, PromptVariant::kZeroShot}) {
      if (s == to_string(v)) return false;
    }
    if (s.find("with_kb") != std::string::npos) return false;
    if (kb != nullptr) {
      for (const auto& e : kb->best_practices) {
        if (s.find(e.text) != std::string::npos) return false;
      }
    }
  }
  return true;
}

std::string DimensionSummary::format() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "Mean = %.2f, SD = %.2f", mean, sd);
  return buf;
}

std::vector<DimensionSummary> summarize(std::span<const RatingRecord> ratings) {
  if (ratings.empty()) throw ValidationError("no ratings to summarize");
  std::vector<DimensionSummary> out;
  const double n = static_cast<double>(ratings.size());
  for (auto d : kDimensions) {
    double sum = 0.0;
    for (const auto& r : ratings) sum += r.score(d);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : ratings) ss += (r.score(d) - mean) * (r.score(d) - mean);
    out.push_back({d, mean, ratings.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0,
                   ratings.size()});
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const DimensionSummary> rows) {
  out << "dimension,mean,sd,n\n";
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%zu\n",
                  std::string(to_string(r.dimension)).c_str(), r.mean, r.sd, r.n);
    out << buf;
  }
}

nlohmann::json summary_json(std::span<const DimensionSummary> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"dimension", to_string(r.dimension)},
                   {"mean", r.mean},
                   {"sd", r.sd},
                   {"n", r.n},
                   {"text", r.format()}});
  }
  return out;
}

nlohmann::json RegressionResult::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"dimension", dimension},
          {"beta", num(beta)},
          {"se", num(se)},
          {"t", num(t)},
          {"p", num(p)},
          {"ci_low", num(ci_low)},
          {"ci_high", num(ci_high)},
          {"n", n},
          {"clusters", clusters},
          {"df", df},
          {"parameters", parameters},
          {"columns", columns},
          {"coefficients", coefficients},
          {"fixed_effects", fixed_effects},
          {"dropped_columns", dropped_columns},
          {"warning", warning}};
}

RegressionResult fe_regression(std::span<const RegressionObs> obs,
                               const RegressionOptions& options) {
  const std::size_t n = obs.size();
  if (n == 0) throw ValidationError("regression needs observations");
  bool any_kb = false, any_base = false;
  for (const auto& o : obs) (o.kb ? any_kb : any_base) = true;
  if (!any_kb || !any_base) {
    throw ValidationError("regression needs ratings for both prompt variants");
  }

  auto cluster_of = [](const RegressionObs& o) -> const std::string& {
    return o.cluster.empty() ? o.rater : o.cluster;
  };
  std::map<std::string, std::size_t> cluster_index;
  for (const auto& o : obs) cluster_index.emplace(cluster_of(o), 0);
  std::size_t g = 0;
  for (auto& [name, idx] : cluster_index) idx = g++;
  const std::size_t clusters = cluster_index.size();
  if (clusters < 2) throw ValidationError("cluster-robust errors need at least two clusters");

  // Candidate columns: intercept, fixed-effect dummies, kb indicator last.
  std::vector<std::pair<std::string, Eigen::VectorXd>> candidates;
  candidates.emplace_back("intercept", Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
  auto add_group = [&](const std::string& prefix, auto key_of) {
    std::set<std::string> levels;
    for (const auto& o : obs) levels.insert(key_of(o));
    bool reference = true;
    for (const auto& level : levels) {
      if (reference) {
        reference = false;
        continue;
      }
      Eigen::VectorXd col(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) col[static_cast<Eigen::Index>(i)] = key_of(obs[i]) == level;
      candidates.emplace_back(prefix + "=" + level, std::move(col));
    }
  };
  if (options.rater_effects) add_group("rater", [](const RegressionObs& o) { return o.rater; });
  if (options.case_effects) add_group("case", [](const RegressionObs& o) { return o.case_id; });
  if (options.year_effects) {
    add_group("year", [](const RegressionObs& o) { return std::to_string(o.cohort_year); });
  }
  {
    Eigen::VectorXd kb(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) kb[static_cast<Eigen::Index>(i)] = obs[i].kb ? 1.0 : 0.0;
    candidates.emplace_back("kb", std::move(kb));
  }

  RegressionResult res;
  res.n = n;
  res.clusters = clusters;
  std::vector<Eigen::VectorXd> basis;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& [name, col] = candidates[c];
    Eigen::VectorXd r = col;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) r -= q.dot(r) * q;
    }
    if (r.norm() <= 1e-9 * std::max(1.0, col.norm())) {
      if (name == "kb") {
        throw ValidationError("the kb indicator is collinear with the fixed effects");
      }
      res.dropped_columns.push_back(name);
      continue;
    }
    basis.push_back(r / r.norm());
    kept.push_back(c);
    if (name != "intercept" && name != "kb") res.fixed_effects.push_back(name);
  }

  const std::size_t k = kept.size();
  res.parameters = k;
  if (n <= k) {
    throw ValidationError("regression has " + std::to_string(n) + " observations for " +
                          std::to_string(k) + " parameters");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) x.col(static_cast<Eigen::Index>(j)) = candidates[kept[j]].second;
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = obs[i].y;

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd u = y - x * beta;
  const Eigen::MatrixXd r_upper =
      qr.matrixQR().topRows(static_cast<Eigen::Index>(k)).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv = r_upper.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
  const Eigen::MatrixXd bread = r_inv * r_inv.transpose();

  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clusters),
                                                 static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i) {
    scores.row(static_cast<Eigen::Index>(cluster_index[cluster_of(obs[i])])) +=
        x.row(static_cast<Eigen::Index>(i)) * u[static_cast<Eigen::Index>(i)];
  }
  const Eigen::MatrixXd meat = scores.transpose() * scores;
  const double gd = static_cast<double>(clusters);
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double c = gd / (gd - 1.0) * (nd - 1.0) / (nd - kd);
  const Eigen::MatrixXd v = c * bread * meat * bread;

  for (std::size_t j = 0; j < k; ++j) {
    res.columns.push_back(candidates[kept[j]].first);
    res.coefficients.push_back(beta[static_cast<Eigen::Index>(j)]);
  }
  const auto kb_col = static_cast<Eigen::Index>(k - 1);
  res.beta = beta[kb_col];
  res.se = std::sqrt(std::max(0.0, v(kb_col, kb_col)));
  res.df = clusters - 1;
  const boost::math::students_t dist(static_cast<double>(res.df));
  const double q = boost::math::quantile(dist, 0.5 + options.confidence / 2.0);
  if (res.se > 0.0) {
    res.t = res.beta / res.se;
    res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t)));
  } else {
    res.t = res.beta == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), res.beta);
    res.p = res.beta == 0.0 ? 1.0 : 0.0;
  }
  res.ci_low = res.beta - q * res.se;
  res.ci_high = res.beta + q * res.se;
  if (clusters < options.few_clusters) {
    res.warning = "only " + std::to_string(clusters) +
                  " clusters; cluster-robust standard errors and p-values are unreliable";
  }
  return res;
}

std::vector<RegressionResult> analyze_ratings(std::span<const RatingRecord> ratings,
                                              const AssessmentSession& session,
                                              const RegressionOptions& options) {
  std::vector<RegressionResult> out;
  for (auto d : kDimensions) {
    std::vector<RegressionObs> obs;
    for (const auto& r : ratings) {
      const auto* item = session.find(r.bundle_id);
      if (item == nullptr) {
        throw UnknownBundleError("rating " + r.rating_id + " refers to unknown bundle '" +
                                 r.bundle_id + "'");
      }
      obs.push_back({static_cast<double>(r.score(d)), item->variant == PromptVariant::kWithKb,
                     r.rater_id, item->student_id, item->cohort_year, ""});
    }
    auto res = fe_regression(obs, options);
    res.dimension = std::string(to_string(d));
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace pathwise
