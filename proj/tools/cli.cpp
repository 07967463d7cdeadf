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

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"
#include "pathwise/datamodel.hpp"
#include "pathwise/explain.hpp"
#include "pathwise/metrics.hpp"
#include "pathwise/rng.hpp"
#include "pathwise/service.hpp"
#include "pathwise/synthetic.hpp"
#include "pathwise/tree.hpp"
#include "pathwise/tuning.hpp"
#include "pathwise/usability.hpp"

namespace fs = std::filesystem;

namespace pathwise::cli {
namespace {

// ---------------------------------------------------------------------------
// Artifacts and provenance

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// The hash recorded in an existing artifact, if any.
std::optional<std::string> recorded_hash(const fs::path& path) {
  std::ifstream in(path);
  std::string first;
  if (!in || !std::getline(in, first)) return std::nullopt;
  const std::string prefix = "# config_hash: ";
  if (first.rfind(prefix, 0) == 0) return first.substr(prefix.size());
  const auto ext = path.extension().string();
  try {
    nlohmann::json j;
    if (ext == ".jsonl") {
      j = nlohmann::json::parse(first);
    } else if (ext == ".json") {
      in.clear();
      in.seekg(0);
      j = nlohmann::json::parse(in);
    }
    if (j.is_object() && j.contains("config_hash") && j["config_hash"].is_string()) {
      return j["config_hash"].get<std::string>();
    }
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

class Run {
 public:
  Run(std::string command, nlohmann::json config, bool force)
      : command_(std::move(command)), config_(std::move(config)), force_(force) {
    hash_ = hex64(fnv1a(command_ + "\n" + config_.dump()));
  }

  const std::string& hash() const { return hash_; }
  const nlohmann::json& config() const { return config_; }

  // Refuses to replace an artifact produced by a different configuration.
  void guard(const fs::path& path) const {
    if (force_ || !fs::exists(path)) return;
    const auto existing = recorded_hash(path);
    if (existing && *existing == hash_) return;
    throw ValidationError("refusing to overwrite '" + path.string() +
                          "' written by a different configuration (" +
                          existing.value_or("no config hash") + "); pass --force");
  }

  void write(const fs::path& path, const std::string& content) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
      out << content;
      if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
    }
    fs::rename(tmp, path);
  }

  // Text and CSV artifacts start with a comment line carrying the hash.
  void write_text(const fs::path& path, const std::string& body) const {
    write(path, "# config_hash: " + hash_ + "\n" + body);
  }

  void write_json(const fs::path& path, nlohmann::json j) const {
    j["config_hash"] = hash_;
    write(path, j.dump(2) + "\n");
  }

  void write_jsonl(const fs::path& path, const std::vector<nlohmann::json>& rows) const {
    std::string text;
    for (auto row : rows) {
      row["config_hash"] = hash_;
      text += row.dump() + "\n";
    }
    write(path, text);
  }

 private:
  std::string command_;
  nlohmann::json config_;
  bool force_;
  std::string hash_;
};

// Records every option of `sub` that was given or has a default.
nlohmann::json options_json(const CLI::App* sub) {
  static const std::set<std::string> kSkip = {"--help", "--force", "--run-log"};
  nlohmann::json j = nlohmann::json::object();
  for (const auto* opt : sub->get_options()) {
    const auto name = opt->get_name();
    if (kSkip.count(name) || name.empty()) continue;
    const auto results = opt->results();
    if (!results.empty()) {
      j[name] = results.size() == 1 ? nlohmann::json(results[0]) : nlohmann::json(results);
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

IntRange parse_range(const std::string& text, const std::string& flag) {
  const auto sep = text.find_first_of(":.");
  try {
    if (sep == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    auto rest = text.substr(sep);
    rest.erase(0, rest.find_first_not_of(":."));
    return {std::stoi(text.substr(0, sep)), std::stoi(rest)};
  } catch (const std::exception&) {
    throw ValidationError(flag + ": expected a range like 1:29, got '" + text + "'");
  }
}

// ---------------------------------------------------------------------------
// Saved model

struct Model {
  FeatureSchema schema{std::vector<FeatureSpec>{}};
  int cohort_year = 1;
  MissingPolicy policy = MissingPolicy::kMedianIndicator;
  FeatureEncoder encoder;
  std::optional<DecisionTree> tree;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::string config_hash;
};

Model load_model(const std::string& path) {
  const auto j = read_json(path);
  try {
    Model m;
    m.schema = FeatureSchema::from_json(j.at("schema"));
    m.cohort_year = j.at("cohort_year").get<int>();
    m.policy = parse_missing_policy(j.at("missing_policy").get<std::string>());
    m.encoder = FeatureEncoder::from_json(m.schema, j.at("encoder"));
    m.tree = DecisionTree::from_json(j.at("tree"));
    m.train_ids = j.at("split").at("train_ids").get<std::vector<std::string>>();
    m.test_ids = j.at("split").at("test_ids").get<std::vector<std::string>>();
    m.config_hash = j.value("config_hash", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed model file: " + e.what());
  }
}

FeatureSchema schema_or_standard(const std::string& path) {
  return path.empty() ? FeatureSchema::standard() : FeatureSchema::load(path);
}

// Records of `year` whose ids appear in `ids`, in `ids` order.
std::vector<const StudentRecord*> pick(const CohortPanel& panel, int year,
                                       const std::vector<std::string>& ids) {
  std::map<std::string, const StudentRecord*> by_id;
  for (const auto* r : panel.year(year)) by_id[r->student_id] = r;
  std::vector<const StudentRecord*> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ValidationError("student '" + id + "' from the model split is not in the data for year " +
                            std::to_string(year));
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<Outcome> labels_of(std::span<const StudentRecord* const> records) {
  std::vector<Outcome> out;
  for (const auto* r : records) {
    if (!r->outcome) throw ValidationError("student '" + r->student_id + "' has no outcome label");
    out.push_back(*r->outcome);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backends

struct BackendFlags {
  std::string kind = "mock";
  std::string endpoint;
  std::string model = "o3";
  double temperature = 0.0;
  int max_tokens = 1024;
  int retries = 2;
  int parallelism = 1;
  std::string audit_log;
};

void add_backend_flags(CLI::App* sub, BackendFlags& f) {
  sub->add_option("--backend", f.kind, "mock or http")
      ->check(CLI::IsMember({"mock", "http"}))
      ->capture_default_str();
  sub->add_option("--endpoint", f.endpoint, "chat completions URL for --backend http");
  sub->add_option("--llm-model", f.model, "model name sent to the endpoint")->capture_default_str();
  sub->add_option("--temperature", f.temperature)->capture_default_str();
  sub->add_option("--max-tokens", f.max_tokens)->capture_default_str();
  sub->add_option("--retries", f.retries, "extra attempts per call")->capture_default_str();
  sub->add_option("--parallelism", f.parallelism, "concurrent backend calls")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--audit-log", f.audit_log, "append request/response bodies here");
}

struct Backend {
  std::unique_ptr<LlmBackend> impl;
  std::unique_ptr<std::ofstream> audit;
  GenerationSettings settings;
};

Backend make_backend(const BackendFlags& f, std::uint64_t seed) {
  Backend b;
  b.settings.temperature = f.temperature;
  b.settings.max_tokens = f.max_tokens;
  b.settings.retries = f.retries;
  if (f.kind == "mock") {
    b.impl = std::make_unique<MockBackend>(seed);
    return b;
  }
  if (f.endpoint.empty()) throw ValidationError("--endpoint is required with --backend http");
  auto http = std::make_unique<HttpBackend>(f.endpoint, f.model);
  if (!f.audit_log.empty()) {
    b.audit = std::make_unique<std::ofstream>(f.audit_log, std::ios::app);
    if (!*b.audit) throw RuntimeFailure("cannot open audit log '" + f.audit_log + "'");
    http->set_audit_log(b.audit.get());
  }
  b.impl = std::move(http);
  return b;
}

// ---------------------------------------------------------------------------
// Commands

struct GenDataFlags {
  std::string config, schema, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
};

int gen_data(const GenDataFlags& f, const Run& run, std::ostream& out) {
  const auto schema = schema_or_standard(f.schema);
  auto cfg = SyntheticConfig::load(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.n) cfg.n_cases = *f.n;
  run.guard(f.out);
  const auto panel = generate_synthetic(cfg, schema);
  std::ostringstream csv;
  write_panel(csv, panel);
  run.write_text(f.out, csv.str());
  out << "wrote " << panel.records().size() << " records for " << cfg.n_cases << " students to "
      << f.out << "\n";
  return 0;
}

struct TrainFlags {
  std::string data, schema, out_dir, missing = "median_indicator";
  std::string criteria = "gini,entropy,log_loss", depth = "1:29", leaf = "5:29";
  int year = 1, folds = 4;
  unsigned threads = 1;
  double holdout = 0.2;
  std::uint64_t seed = 0;
};

int train_cmd(const TrainFlags& f, const Run& run, std::ostream& out) {
  const fs::path dir(f.out_dir);
  for (const char* name : {"model.json", "cv_results.csv", "tree.txt"}) run.guard(dir / name);
  if (!(f.holdout > 0.0 && f.holdout < 1.0)) {
    throw ValidationError("--holdout must lie strictly between 0 and 1");
  }
  const auto schema = schema_or_standard(f.schema);
  const auto panel = load_panel(f.data, schema);
  const auto policy = parse_missing_policy(f.missing);
  const auto records = panel.year(f.year);
  if (records.empty()) {
    throw ValidationError("--year: no records for cohort year " + std::to_string(f.year));
  }
  const auto labels = labels_of(records);
  const auto split = stratified_holdout(labels, f.holdout, f.seed);
  std::vector<const StudentRecord*> train_recs;
  std::vector<std::string> train_ids, test_ids;
  for (auto i : split.train) {
    train_recs.push_back(records[i]);
    train_ids.push_back(records[i]->student_id);
  }
  for (auto i : split.test) test_ids.push_back(records[i]->student_id);

  GridSpec grid;
  grid.criteria.clear();
  for (const auto& c : split_list(f.criteria)) grid.criteria.push_back(parse_criterion(c));
  grid.depth_range = parse_range(f.depth, "--depth");
  grid.leaf_range = parse_range(f.leaf, "--leaf");
  grid.k_folds = f.folds;
  grid.seed = f.seed;
  grid.threads = f.threads;
  grid.validate();

  const auto cv = grid_search(train_recs, schema, f.year, policy, grid);
  const auto encoder = FeatureEncoder::fit(schema, train_recs, policy);
  const auto matrix = encoder.transform(train_recs, f.year);
  const auto tree = train(matrix, cv.best, f.seed);

  nlohmann::json model = {
      {"schema", schema.to_json()},
      {"cohort_year", f.year},
      {"missing_policy", to_string(policy)},
      {"hyperparameters",
       {{"criterion", to_string(cv.best.criterion)},
        {"max_depth", cv.best.max_depth},
        {"min_samples_leaf", cv.best.min_samples_leaf}}},
      {"cv_best_mean_weighted_f1", cv.best_mean},
      {"encoder", encoder.to_json()},
      {"tree", tree.to_json()},
      {"split",
       {{"seed", f.seed}, {"holdout", f.holdout}, {"train_ids", train_ids}, {"test_ids", test_ids}}}};
  std::ostringstream cv_csv;
  cv.write_csv(cv_csv);
  run.write_json(dir / "model.json", model);
  run.write_text(dir / "cv_results.csv", cv_csv.str());
  run.write_text(dir / "tree.txt", render_tree_text(tree));
  out << "best " << to_string(cv.best.criterion) << " depth=" << cv.best.max_depth
      << " leaf=" << cv.best.min_samples_leaf << " mean weighted F1=" << cv.best_mean << " over "
      << cv.table.size() << " combinations\n";
  return 0;
}

struct EvaluateFlags {
  std::string model, data, baseline, out_dir;
};

ClassReport baseline_report(const std::string& path) {
  const auto j = read_json(path);
  if (!j.contains("report") || j["report"].is_null()) {
    throw ValidationError(path + ": no zero-shot report to compare against");
  }
  return ClassReport::from_json(j["report"]);
}

int evaluate_cmd(const EvaluateFlags& f, const Run& run, std::ostream& out) {
  const fs::path dir(f.out_dir);
  for (const char* name : {"report.json", "roc.csv", "report.txt"}) run.guard(dir / name);
  const auto model = load_model(f.model);
  const auto panel = load_panel(f.data, model.schema);
  const auto test = pick(panel, model.cohort_year, model.test_ids);
  const auto m = model.encoder.transform(test, model.cohort_year);
  std::vector<Outcome> preds;
  std::vector<double> scores;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto p = model.tree->predict(m.row(r));
    preds.push_back(p.label);
    scores.push_back(p.at_risk_score);
  }
  const auto report = class_report(preds, *m.labels(), model.cohort_year);
  const auto roc = roc_auc(scores, *m.labels());
  std::optional<ClassReport> base;
  if (!f.baseline.empty()) base = baseline_report(f.baseline);

  std::ostringstream roc_csv;
  write_roc_csv(roc_csv, roc);
  nlohmann::json j = {{"model_config_hash", model.config_hash},
                      {"report", report.to_json()},
                      {"auc", roc.auc},
                      {"baseline", base ? base->to_json() : nlohmann::json(nullptr)}};
  run.write_json(dir / "report.json", j);
  run.write_text(dir / "roc.csv", roc_csv.str());
  auto table = format_report_table(report, base ? &*base : nullptr);
  char buf[96];
  if (base) {
    std::snprintf(buf, sizeof buf, "Accuracy\t%.2f (%.2f)\n", report.accuracy, base->accuracy);
  } else {
    std::snprintf(buf, sizeof buf, "Accuracy\t%.2f\n", report.accuracy);
  }
  table += buf;
  std::snprintf(buf, sizeof buf, "AUC\t%.4f\n", roc.auc);
  table += buf;
  run.write_text(dir / "report.txt", table);
  out << table;
  return 0;
}

struct ExplainFlags {
  std::string model, data, kb, variants = "basic,with_kb", raters = "cm1,cm2,cm3", out_dir;
  std::size_t cases = 30;
  std::uint64_t seed = 0;
  BackendFlags backend;
};

int explain_cmd(const ExplainFlags& f, const Run& run, std::ostream& out, std::ostream& err) {
  const fs::path dir(f.out_dir);
  for (const char* name : {"bundles.jsonl", "session.json"}) run.guard(dir / name);
  std::vector<PromptVariant> variants;
  for (const auto& v : split_list(f.variants)) {
    const auto pv = parse_prompt_variant(v);
    if (pv == PromptVariant::kZeroShot) {
      throw ValidationError("--variants: zero_shot is produced by the zero-shot command");
    }
    variants.push_back(pv);
  }
  if (variants.empty()) throw ValidationError("--variants: at least one variant is required");
  std::optional<KnowledgeBase> kb;
  if (!f.kb.empty()) kb = KnowledgeBase::load(f.kb);
  if (std::count(variants.begin(), variants.end(), PromptVariant::kWithKb) && (!kb || kb->empty())) {
    throw ValidationError("--kb: the with_kb variant needs a non-empty knowledge base");
  }
  const auto model = load_model(f.model);
  const auto panel = load_panel(f.data, model.schema);
  auto ids = model.test_ids;
  Rng rng(f.seed);
  rng.shuffle(std::span<std::string>(ids));
  if (f.cases > 0 && ids.size() > f.cases) ids.resize(f.cases);
  const auto records = pick(panel, model.cohort_year, ids);
  const CaseDataRenderer renderer(panel);
  std::vector<ExplainCase> cases;
  for (const auto* r : records) {
    cases.push_back({r->student_id, model.cohort_year, model.encoder.encode(*r),
                     renderer.render(r->student_id, model.cohort_year)});
  }
  auto backend = make_backend(f.backend, f.seed);
  ExplainOptions opts;
  opts.settings = backend.settings;
  opts.seed = f.seed;
  const auto bundles = explain_batch(*model.tree, cases, variants, *backend.impl,
                                     kb ? &*kb : nullptr, opts,
                                     static_cast<unsigned>(f.backend.parallelism));
  std::size_t failed = 0, unparsed = 0;
  std::vector<nlohmann::json> rows;
  for (const auto& b : bundles) {
    failed += b.status == BundleStatus::kBackendError;
    unparsed += b.status == BundleStatus::kParseError;
    rows.push_back(b.to_json());
  }
  run.write_jsonl(dir / "bundles.jsonl", rows);
  if (failed == bundles.size()) {
    throw RuntimeFailure("every backend call failed; bundles were stored with their errors");
  }
  auto session = AssessmentSession::create(bundles, split_list(f.raters),
                                           "session-" + run.hash().substr(0, 8));
  run.write_json(dir / "session.json", session.to_json());
  out << "wrote " << bundles.size() << " bundles (" << failed << " backend errors, " << unparsed
      << " unparseable) and a session with " << session.items.size() << " items for "
      << session.raters.size() << " raters\n";
  if (failed > 0) err << "warning: " << failed << " bundles have backend errors\n";
  return 0;
}

struct ZeroShotFlags {
  std::string data, model, schema, out_dir;
  int year = 1;
  std::size_t cases = 0;
  std::uint64_t seed = 0;
  BackendFlags backend;
};

int zero_shot_cmd(const ZeroShotFlags& f, const Run& run, std::ostream& out) {
  const fs::path dir(f.out_dir);
  for (const char* name : {"zero_shot.json", "report.txt"}) run.guard(dir / name);
  std::optional<Model> model;
  if (!f.model.empty()) model = load_model(f.model);
  const auto schema = model ? model->schema : schema_or_standard(f.schema);
  const int year = model ? model->cohort_year : f.year;
  const auto panel = load_panel(f.data, schema);
  std::vector<const StudentRecord*> records;
  if (model) {
    records = pick(panel, year, model->test_ids);
  } else {
    records = panel.year(year);
  }
  if (f.cases > 0 && records.size() > f.cases) records.resize(f.cases);
  if (records.empty()) throw ValidationError("no cases to evaluate for cohort year " + std::to_string(year));
  const auto labels = labels_of(records);
  const CaseDataRenderer renderer(panel);
  std::vector<ZeroShotCase> cases;
  for (std::size_t i = 0; i < records.size(); ++i) {
    cases.push_back({records[i]->student_id, year, renderer.render(records[i]->student_id, year),
                     labels[i]});
  }
  auto backend = make_backend(f.backend, f.seed);
  const auto result = zero_shot_evaluate(cases, *backend.impl, backend.settings,
                                         static_cast<unsigned>(f.backend.parallelism));
  nlohmann::json j = result.to_json();
  j["backend"] = backend.impl->identity();
  nlohmann::json per_case = nlohmann::json::array();
  for (const auto& c : result.cases) {
    per_case.push_back({{"student_id", c.student_id},
                        {"prediction", c.prediction ? nlohmann::json(to_string(*c.prediction))
                                                    : nlohmann::json(nullptr)},
                        {"unparseable", c.unparseable},
                        {"error", c.error},
                        {"response", c.response}});
  }
  j["per_case"] = per_case;
  run.write_json(dir / "zero_shot.json", j);
  std::string text = result.report ? format_report_table(*result.report) : "no scored cases\n";
  text += "# parsed=" + std::to_string(result.parsed) +
          " unparseable_as_Grad4yr=" + std::to_string(result.unparseable) +
          " backend_errors_excluded=" + std::to_string(result.backend_errors) + "\n";
  run.write_text(dir / "report.txt", text);
  out << text;
  if (!result.report) throw RuntimeFailure("every backend call failed");
  return 0;
}

struct ServeFlags {
  std::string session, bundles, kb, ratings = "ratings.jsonl", host = "127.0.0.1", cors = "*";
  int port = 8080;
};

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void stop_server(int) {
  if (auto* s = g_server.load()) s->stop();
}

int serve_cmd(const ServeFlags& f, std::ostream& out) {
  auto session = AssessmentSession::load(f.session);
  auto bundles = BundleStore::load(f.bundles);
  std::optional<KnowledgeBase> kb;
  if (!f.kb.empty()) kb = KnowledgeBase::load(f.kb);
  ReviewService service(std::move(session), std::move(bundles), std::move(kb), f.ratings);
  httplib::Server server;
  bind_routes(server, service, f.cors);
  if (!server.bind_to_port(f.host, f.port)) {
    throw RuntimeFailure("cannot listen on " + f.host + ":" + std::to_string(f.port));
  }
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  out << "serving on http://" << f.host << ":" << f.port << "\n" << std::flush;
  server.listen_after_bind();
  g_server = nullptr;
  return 0;
}

struct IngestFlags {
  std::string session, ratings, csv;
};

int ingest_cmd(const IngestFlags& f, std::ostream& out) {
  const auto session = AssessmentSession::load(f.session);
  const auto rows = load_ratings_csv(f.csv);
  RatingStore store(f.ratings, session.bundle_ids());
  // Validate everything first so a bad row leaves the store untouched.
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string where = "ratings row " + std::to_string(i + 1) + ": ";
    if (!session.find(r.bundle_id)) {
      throw UnknownBundleError(where + "unknown bundle '" + r.bundle_id + "'", "/ID");
    }
    if (std::find(session.raters.begin(), session.raters.end(), r.rater_id) == session.raters.end()) {
      throw ValidationError(where + "rater '" + r.rater_id + "' is not in the session", "/rater");
    }
    if (store.has(r.bundle_id, r.rater_id) || !seen.insert({r.bundle_id, r.rater_id}).second) {
      throw DuplicateRatingError(where + "duplicate rating of '" + r.bundle_id + "' by '" +
                                 r.rater_id + "'");
    }
  }
  for (const auto& r : rows) store.add(r);
  out << "ingested " << rows.size() << " ratings into " << f.ratings << "\n";
  return 0;
}

struct AnalyzeFlags {
  std::string session, ratings, out_dir;
};

int analyze_cmd(const AnalyzeFlags& f, const Run& run, std::ostream& out) {
  const fs::path dir(f.out_dir);
  for (const char* name : {"regression.json", "summary.csv", "summary.txt"}) run.guard(dir / name);
  const auto session = AssessmentSession::load(f.session);
  if (!fs::exists(f.ratings)) throw ValidationError("--ratings: no rating store at '" + f.ratings + "'");
  const RatingStore store(f.ratings, session.bundle_ids());
  const auto ratings = store.snapshot();
  const auto summary = summarize(ratings);
  const auto results = analyze_ratings(ratings, session);

  nlohmann::json reg = nlohmann::json::array();
  for (const auto& r : results) reg.push_back(r.to_json());
  run.write_json(dir / "regression.json",
                 {{"ratings", ratings.size()}, {"summary", summary_json(summary)}, {"regressions", reg}});
  std::ostringstream csv;
  write_summary_csv(csv, summary);
  run.write_text(dir / "summary.csv", csv.str());

  std::string text;
  char buf[256];
  for (const auto& s : summary) {
    text += std::string(to_string(s.dimension)) + " (" + s.format() + ")\n";
  }
  text += "\ndimension\tbeta\tse\tp\tci90_low\tci90_high\n";
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%s\t%.3f\t%.3f\t%.3f\t%.3f\t%.3f\n", r.dimension.c_str(), r.beta,
                  r.se, r.p, r.ci_low, r.ci_high);
    text += buf;
  }
  if (!results.empty() && !results[0].warning.empty()) text += "# warning: " + results[0].warning + "\n";
  run.write_text(dir / "summary.txt", text);
  out << text;
  return 0;
}

void append_run_log(const std::string& path, const nlohmann::json& entry) {
  if (path.empty()) return;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream log(p, std::ios::app);
  if (log) log << entry.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpretable graduation-risk pipeline"};
  app.require_subcommand(1);
  std::string run_log = "run_log.jsonl";
  bool force = false;
  app.add_option("--run-log", run_log, "append one JSON line per run here")->capture_default_str();

  GenDataFlags gd;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic cohort panel");
  gen->add_option("--config", gd.config, "synthetic config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--schema", gd.schema, "feature schema JSON (default: built-in)")->check(CLI::ExistingFile);
  gen->add_option("--out", gd.out, "panel CSV to write")->required();
  gen->add_option("--seed", gd.seed, "override the config seed");
  gen->add_option("--n", gd.n, "override the number of students");

  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "tune and fit the decision tree");
  tr->add_option("--data", tf.data, "panel CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--schema", tf.schema)->check(CLI::ExistingFile);
  tr->add_option("--year", tf.year, "cohort year 1-4")->check(CLI::Range(1, 4))->capture_default_str();
  tr->add_option("--holdout", tf.holdout, "held-out fraction")->capture_default_str();
  tr->add_option("--seed", tf.seed)->capture_default_str();
  tr->add_option("--missing", tf.missing, "median_indicator or median")->capture_default_str();
  tr->add_option("--criteria", tf.criteria)->capture_default_str();
  tr->add_option("--depth", tf.depth, "max_depth range")->capture_default_str();
  tr->add_option("--leaf", tf.leaf, "min_samples_leaf range")->capture_default_str();
  tr->add_option("--folds", tf.folds)->capture_default_str();
  tr->add_option("--threads", tf.threads)->capture_default_str();
  tr->add_option("--out-dir", tf.out_dir)->required();

  EvaluateFlags ef;
  auto* ev = app.add_subcommand("evaluate", "score the held-out cases");
  ev->add_option("--model", ef.model)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ef.data)->required()->check(CLI::ExistingFile);
  ev->add_option("--baseline", ef.baseline, "zero_shot.json for the parenthetical columns")
      ->check(CLI::ExistingFile);
  ev->add_option("--out-dir", ef.out_dir)->required();

  ExplainFlags xf;
  auto* ex = app.add_subcommand("explain", "generate explanation bundles and a review session");
  ex->add_option("--model", xf.model)->required()->check(CLI::ExistingFile);
  ex->add_option("--data", xf.data)->required()->check(CLI::ExistingFile);
  ex->add_option("--kb", xf.kb, "knowledge base JSON")->check(CLI::ExistingFile);
  ex->add_option("--variants", xf.variants)->capture_default_str();
  ex->add_option("--cases", xf.cases, "held-out cases to explain (0 = all)")->capture_default_str();
  ex->add_option("--raters", xf.raters)->capture_default_str();
  ex->add_option("--seed", xf.seed)->capture_default_str();
  ex->add_option("--out-dir", xf.out_dir)->required();
  add_backend_flags(ex, xf.backend);

  ZeroShotFlags zf;
  auto* zs = app.add_subcommand("zero-shot", "evaluate the LLM-only baseline");
  zs->add_option("--data", zf.data)->required()->check(CLI::ExistingFile);
  zs->add_option("--model", zf.model, "use this model's held-out cases")->check(CLI::ExistingFile);
  zs->add_option("--schema", zf.schema)->check(CLI::ExistingFile);
  zs->add_option("--year", zf.year)->check(CLI::Range(1, 4))->capture_default_str();
  zs->add_option("--cases", zf.cases, "limit (0 = all)")->capture_default_str();
  zs->add_option("--seed", zf.seed)->capture_default_str();
  zs->add_option("--out-dir", zf.out_dir)->required();
  add_backend_flags(zs, zf.backend);

  ServeFlags sf;
  auto* sv = app.add_subcommand("serve", "serve blinded explanations and collect ratings");
  sv->add_option("--session", sf.session)->required()->check(CLI::ExistingFile);
  sv->add_option("--bundles", sf.bundles)->required()->check(CLI::ExistingFile);
  sv->add_option("--kb", sf.kb, "redact this knowledge base from responses")->check(CLI::ExistingFile);
  sv->add_option("--ratings", sf.ratings, "rating store (JSON Lines)")->capture_default_str();
  sv->add_option("--host", sf.host)->capture_default_str();
  sv->add_option("--port", sf.port)->capture_default_str();
  sv->add_option("--cors-origin", sf.cors)->capture_default_str();

  IngestFlags inf;
  auto* ing = app.add_subcommand("ingest-ratings", "import a scoring-sheet CSV");
  ing->add_option("--session", inf.session)->required()->check(CLI::ExistingFile);
  ing->add_option("--ratings", inf.ratings, "rating store (JSON Lines)")->required();
  ing->add_option("--csv", inf.csv)->required()->check(CLI::ExistingFile);

  AnalyzeFlags af;
  auto* an = app.add_subcommand("analyze-ratings", "summaries and fixed-effects regressions");
  an->add_option("--session", af.session)->required()->check(CLI::ExistingFile);
  an->add_option("--ratings", af.ratings)->required();
  an->add_option("--out-dir", af.out_dir)->required();

  for (auto* sub : {gen, tr, ev, ex, zs, an}) {
    sub->add_flag("--force", force, "overwrite artifacts from a different configuration");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const auto subs = app.get_subcommands();
    append_run_log(run_log, {{"time", utc_timestamp()},
                             {"command", subs.empty() ? "" : subs.front()->get_name()},
                             {"args", args},
                             {"exit_code", 1},
                             {"message", e.what()}});
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const Run ctx(command, options_json(sub), force);
  nlohmann::json entry = {{"time", utc_timestamp()},
                          {"command", command},
                          {"args", args},
                          {"config", ctx.config()},
                          {"config_hash", ctx.hash()}};
  if (ctx.config().contains("--seed")) entry["seed"] = ctx.config()["--seed"];

  int code = 0;
  try {
    if (sub == gen) code = gen_data(gd, ctx, out);
    else if (sub == tr) code = train_cmd(tf, ctx, out);
    else if (sub == ev) code = evaluate_cmd(ef, ctx, out);
    else if (sub == ex) code = explain_cmd(xf, ctx, out, err);
    else if (sub == zs) code = zero_shot_cmd(zf, ctx, out);
    else if (sub == sv) code = serve_cmd(sf, out);
    else if (sub == ing) code = ingest_cmd(inf, out);
    else if (sub == an) code = analyze_cmd(af, ctx, out);
  } catch (const ValidationError& e) {
    entry["message"] = e.what();
    err << "error: " << e.what();
    if (!e.pointer().empty()) err << " [" << e.pointer() << "]";
    err << "\n";
    code = 1;
  } catch (const RuntimeFailure& e) {
    entry["message"] = e.what();
    err << "error: " << e.what() << "\n";
    code = 2;
  } catch (const std::exception& e) {
    entry["message"] = e.what();
    err << "error: " << e.what() << "\n";
    code = 2;
  }
  entry["exit_code"] = code;
  append_run_log(run_log, entry);
  return code;
}

}  // namespace pathwise::cli
