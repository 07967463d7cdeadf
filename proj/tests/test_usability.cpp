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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "pathwise/rng.hpp"
#include "pathwise/usability.hpp"
#include "oracles.hpp"

namespace pathwise {
namespace {

nlohmann::json valid_payload(const std::string& bundle = "b1", const std::string& rater = "cm1") {
  return {{"bundle_id", bundle},
          {"rater_id", rater},
          {"scores",
           {{"Utility", 4}, {"Precision", 4}, {"Completeness", 3}, {"TimeSaved", 5},
            {"Clarity", 4}, {"Trust", 3}, {"Fairness", 4}, {"NoHarm", 5}}}};
}

RatingRecord with_scores(std::initializer_list<int> values) {
  RatingRecord r;
  std::size_t i = 0;
  for (int v : values) r.scores[i++] = v;
  return r;
}

TEST_CASE("dimension names") {
  CHECK(kDimensions.size() == 8);
  CHECK(parse_dimension("Time Saved") == Dimension::kTimeSaved);
  CHECK(parse_dimension("no_harm") == Dimension::kNoHarm);
  CHECK(parse_dimension("CLARITY") == Dimension::kClarity);
  CHECK_FALSE(parse_dimension("Speed"));
}

TEST_CASE("summaries use the sample standard deviation") {
  const std::vector<RatingRecord> r = {with_scores({3, 1, 1, 1, 1, 1, 1, 1}),
                                       with_scores({4, 1, 1, 1, 1, 1, 1, 1}),
                                       with_scores({4, 1, 1, 1, 1, 1, 1, 1})};
  const auto s = summarize(r);
  CHECK(s[0].mean == doctest::Approx(11.0 / 3.0));
  CHECK(s[0].sd == doctest::Approx(std::sqrt(1.0 / 3.0)));
  CHECK(std::abs(s[0].sd - 0.577) < 5e-4);
  CHECK(s[1].sd == 0.0);
  CHECK(s[0].n == 3);
  CHECK(s[0].format() == "Mean = 3.67, SD = 0.58");
  CHECK_THROWS_AS(summarize(std::vector<RatingRecord>{}), ValidationError);
  std::ostringstream out;
  write_summary_csv(out, s);
  CHECK(out.str().starts_with("dimension,mean,sd,n\nUtility,3.666667,0.577350,3\n"));
}

TEST_CASE("rating validation") {
  const auto r = RatingRecord::from_json(valid_payload());
  CHECK(r.score(Dimension::kTimeSaved) == 5);
  CHECK(RatingRecord::from_json(r.to_json()) == r);

  auto bad = valid_payload();
  bad["scores"]["Clarity"] = 0;
  try {
    RatingRecord::from_json(bad);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(e.pointer() == "/scores/Clarity");
  }
  bad = valid_payload();
  bad["scores"]["Trust"] = 6;
  CHECK_THROWS_WITH_AS(RatingRecord::from_json(bad), doctest::Contains("Trust"), ValidationError);
  bad = valid_payload();
  bad["scores"].erase("NoHarm");
  CHECK_THROWS_AS(RatingRecord::from_json(bad), ValidationError);
  bad = valid_payload();
  bad["scores"]["Utility"] = 3.5;
  CHECK_THROWS_AS(RatingRecord::from_json(bad), ValidationError);
  bad = valid_payload();
  bad["variant"] = "with_kb";
  CHECK_THROWS_AS(RatingRecord::from_json(bad), ValidationError);
  bad = valid_payload();
  bad["scores"]["Speed"] = 3;
  CHECK_THROWS_AS(RatingRecord::from_json(bad), ValidationError);
  CHECK_THROWS_AS(RatingRecord::from_json(nlohmann::json::array()), ValidationError);
}

TEST_CASE("rating store enforces identity rules and persists") {
  const auto path = std::filesystem::temp_directory_path() / "pathwise_test_ratings.jsonl";
  std::filesystem::remove(path);
  {
    RatingStore store(path.string(), {"b1", "b2"});
    const auto stored = store.add(RatingRecord::from_json(valid_payload()));
    CHECK(stored.rating_id == "r00001");
    CHECK_FALSE(stored.submitted_at.empty());
    CHECK_THROWS_AS(store.add(RatingRecord::from_json(valid_payload())), DuplicateRatingError);
    CHECK_THROWS_AS(store.add(RatingRecord::from_json(valid_payload("b9"))), UnknownBundleError);
    store.add(RatingRecord::from_json(valid_payload("b1", "cm2")));
    CHECK(store.snapshot().size() == 2);
  }
  RatingStore reopened(path.string(), {"b1", "b2"});
  CHECK(reopened.snapshot().size() == 2);
  CHECK(reopened.has("b1", "cm2"));
  CHECK_THROWS_AS(reopened.add(RatingRecord::from_json(valid_payload("b1", "cm2"))),
                  DuplicateRatingError);
  CHECK(reopened.add(RatingRecord::from_json(valid_payload("b2"))).rating_id == "r00003");
  std::filesystem::remove(path);
}

TEST_CASE("scoring sheet CSV") {
  std::istringstream in(
      "ID,Utility,Precision,Completeness,Time Saved,Clarity,Trust,Fairness,No Harm,rater,comment\n"
      "b1,4,4,3,5,4,3,4,5,cm1,\"clear, short\"\n"
      "b2,3,3,3,3,3,3,3,3,cm2,\n");
  const auto rows = read_ratings_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].comment == "clear, short");
  CHECK_FALSE(rows[1].comment);
  CHECK(rows[0].score(Dimension::kNoHarm) == 5);

  std::istringstream bad(
      "ID,Utility,Precision,Completeness,TimeSaved,Clarity,Trust,Fairness,NoHarm,rater\n"
      "b1,4,4,3,5,9,3,4,5,cm1\n");
  try {
    read_ratings_csv(bad);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(e.pointer() == "/scores/Clarity");
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  std::istringstream missing("ID,Utility,rater\nb1,4,cm1\n");
  CHECK_THROWS_AS(read_ratings_csv(missing), ValidationError);
}

TEST_CASE("noiseless planted effect is recovered exactly") {
  Rng rng(1);
  const auto obs = oracle::simulate(rng, 0.6, 0.0);
  const auto r = fe_regression(obs);
  CHECK(std::abs(r.beta - 0.6) <= 1e-9);
  CHECK(r.clusters == 3);
  CHECK(r.df == 2);
  CHECK(r.n == 180);
  // Cohort years are nested in cases, so their dummies drop out.
  CHECK(std::count_if(r.dropped_columns.begin(), r.dropped_columns.end(),
                      [](const std::string& c) { return c.starts_with("year="); }) == 3);
  CHECK_FALSE(r.warning.empty());
  CHECK(r.columns.back() == "kb");
}

TEST_CASE("ols solution satisfies the normal equations") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto obs = oracle::simulate(rng, 0.93, 0.5, 10 + rep);
    const auto r = fe_regression(obs);
    const auto x = oracle::design(obs, r.columns);
    const auto y = oracle::outcomes(obs);
    Eigen::VectorXd b(r.coefficients.size());
    for (std::size_t j = 0; j < r.coefficients.size(); ++j) b[j] = r.coefficients[j];
    const Eigen::VectorXd g = x.transpose() * (y - x * b);
    CHECK(g.cwiseAbs().maxCoeff() <= 1e-8 * (x.transpose() * y).cwiseAbs().maxCoeff());
  }
}

TEST_CASE("small instances match a pseudo-inverse oracle") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<RegressionObs> obs;
    const std::size_t n = 5 + rng.below(2);
    for (std::size_t i = 0; i < n; ++i) {
      obs.push_back({1.0 + rng.below(5), i % 2 == 0, i < n / 2 ? "a" : "b",
                     rng.bernoulli(0.5) ? "c1" : "c2", 1, ""});
    }
    RegressionResult r;
    try {
      r = fe_regression(obs);
    } catch (const ValidationError&) {
      continue;  // kb collinear with the random effects draw
    }
    const auto x = oracle::design(obs, r.columns);
    const Eigen::VectorXd b =
        x.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(oracle::outcomes(obs));
    CHECK(std::abs(b[b.size() - 1] - r.beta) <= 1e-9);
  }
}

TEST_CASE("single-observation clusters reduce CR1 to HC1") {
  Rng rng(4);
  auto obs = oracle::simulate(rng, 0.5, 0.7, 8);
  for (std::size_t i = 0; i < obs.size(); ++i) obs[i].cluster = "obs" + std::to_string(i);
  RegressionOptions opt;
  opt.rater_effects = false;
  opt.year_effects = false;
  const auto r = fe_regression(obs, opt);
  CHECK(r.clusters == obs.size());

  const auto se = oracle::hc1_last_se(oracle::design(obs, r.columns), oracle::outcomes(obs));
  CHECK(std::abs(se - r.se) <= 1e-9);
}

TEST_CASE("coverage of the 90% interval with three rater clusters") {
  Rng rng(2024);
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto r = fe_regression(oracle::simulate(rng, 0.93, 0.5));
    if (r.ci_low <= 0.93 && 0.93 <= r.ci_high) ++covered;
  }
  MESSAGE("coverage " << covered << "/200");
  CHECK(covered >= 170);
}

TEST_CASE("invariance to rater shifts and row order") {
  Rng rng(5);
  const auto obs = oracle::simulate(rng, 0.93, 0.5, 12);
  const auto base = fe_regression(obs);

  auto shifted = obs;
  for (auto& o : shifted) o.y += o.rater == "cm2" ? 1.5 : (o.rater == "cm3" ? -0.25 : 0.0);
  const auto s = fe_regression(shifted);
  CHECK(std::abs(s.beta - base.beta) <= 1e-9);
  CHECK(std::abs(s.se - base.se) <= 1e-9);

  auto permuted = obs;
  Rng shuffle_rng(6);
  shuffle_rng.shuffle(std::span<RegressionObs>(permuted));
  const auto p = fe_regression(permuted);
  CHECK(std::abs(p.beta - base.beta) <= 1e-9);
  CHECK(std::abs(p.se - base.se) <= 1e-9);
  CHECK(std::abs(p.p - base.p) <= 1e-9);
  CHECK(std::abs(p.ci_low - base.ci_low) <= 1e-9);
  CHECK(p.columns == base.columns);
}

TEST_CASE("regression preconditions") {
  Rng rng(7);
  auto obs = oracle::simulate(rng, 0.5, 0.5, 5);
  auto one_cluster = obs;
  for (auto& o : one_cluster) o.rater = "cm1";
  CHECK_THROWS_AS(fe_regression(one_cluster), ValidationError);
  auto one_variant = obs;
  for (auto& o : one_variant) o.kb = false;
  CHECK_THROWS_AS(fe_regression(one_variant), ValidationError);
  auto collinear = obs;
  for (auto& o : collinear) o.kb = o.rater == "cm2";
  CHECK_THROWS_WITH_AS(fe_regression(collinear), doctest::Contains("collinear"), ValidationError);
}

ExplanationBundle bundle(const std::string& id, PromptVariant v, const std::string& student,
                         const std::string& response) {
  ExplanationBundle b;
  b.bundle_id = id;
  b.variant = v;
  b.student_id = student;
  b.cohort_year = 1;
  b.prompt = "# Input\n\n## Case Data (x)\n\ngpa: 40.0\ncost: 12.5\n\n# Output Format:\n";
  b.response = response;
  return b;
}

TEST_CASE("sessions and blinded views") {
  KnowledgeBase kb{{{"Tutoring", "Refer students to tutoring within two weeks."}}};
  const std::vector<ExplanationBundle> bundles = {
      bundle("b1", PromptVariant::kBasic, "S1", "Prediction: Grad4yr"),
      bundle("b2", PromptVariant::kWithKb, "S1",
             "Prediction: Grad4yr. Refer students to tutoring within two weeks."),
      bundle("b3", PromptVariant::kWithKb, "S2", "Prediction: NoGrad4yr")};
  const auto s = AssessmentSession::create(bundles, {"cm1", "cm2", "cm3"}, "sess");
  CHECK(s.items.size() == 3);
  CHECK(AssessmentSession::from_json(s.to_json()).to_json() == s.to_json());
  CHECK_FALSE(is_blind(s.to_json(), &kb));
  CHECK(is_blind(blinded_session_view(s), &kb));

  const auto order = s.order_for("cm1");
  CHECK(order.size() == 3);
  CHECK(order == s.order_for("cm1"));

  for (const auto& b : bundles) {
    const auto view = blinded_bundle_view(b, &kb);
    CHECK(is_blind(view, &kb));
    CHECK_FALSE(view.contains("variant"));
    CHECK(view["case_summary"] == "gpa: 40.0\ncost: 12.5\n");
  }
  CHECK(blinded_bundle_view(bundles[1], &kb)["explanation"] == "Prediction: Grad4yr. [redacted]");
  CHECK_FALSE(is_blind({{"x", {{"variant", 1}}}}, nullptr));
  CHECK_FALSE(is_blind({{"x", "with_kb"}}, nullptr));
  CHECK_FALSE(is_blind({{"x", "see: Refer students to tutoring within two weeks."}}, &kb));
  CHECK_THROWS_AS(AssessmentSession::create(bundles, {"cm1", "cm1"}, "s"), ValidationError);
}

TEST_CASE("analyze joins ratings to the hidden design") {
  std::vector<ExplanationBundle> bundles;
  for (int c = 0; c < 6; ++c) {
    bundles.push_back(bundle("b" + std::to_string(2 * c), PromptVariant::kBasic,
                             "S" + std::to_string(c), "x"));
    bundles.push_back(bundle("b" + std::to_string(2 * c + 1), PromptVariant::kWithKb,
                             "S" + std::to_string(c), "x"));
  }
  const auto s = AssessmentSession::create(bundles, {"cm1", "cm2", "cm3"}, "sess");
  std::vector<RatingRecord> ratings;
  int rater_shift = 0;
  for (const auto& rater : s.raters) {
    for (const auto& item : s.items) {
      RatingRecord r;
      r.bundle_id = item.bundle_id;
      r.rater_id = rater;
      const int base = 2 + (item.variant == PromptVariant::kWithKb ? 1 : 0) + rater_shift % 2;
      r.scores.fill(base);
      ratings.push_back(r);
    }
    ++rater_shift;
  }
  const auto results = analyze_ratings(ratings, s);
  REQUIRE(results.size() == 8);
  for (const auto& r : results) CHECK(std::abs(r.beta - 1.0) <= 1e-9);
  CHECK(results[7].dimension == "NoHarm");
  CHECK(results[0].to_json()["dimension"] == "Utility");
}

}  // namespace
}  // namespace pathwise
