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

#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "pathwise/service.hpp"

namespace pathwise {
namespace {

const KnowledgeBase& kb() {
  static const KnowledgeBase k{{{"Tutoring", "Refer students to tutoring within two weeks."},
                                {"Aid", "Review unmet need with the aid office."}}};
  return k;
}

std::vector<ExplanationBundle> fixture_bundles() {
  std::vector<ExplanationBundle> out;
  for (int c = 0; c < 3; ++c) {
    for (auto v : {PromptVariant::kBasic, PromptVariant::kWithKb}) {
      ExplanationBundle b;
      b.student_id = "S" + std::to_string(c);
      b.cohort_year = 1 + c;
      b.variant = v;
      b.bundle_id = make_bundle_id(1, b.student_id, b.cohort_year, v, out.size());
      b.prompt = render_prompt(v, b.cohort_year, "leaf: counts=[1, 3] → Grad4yr (p=0.750)\n",
                               "gpacumulativecurrent: 40.0\n", &kb());
      b.response = "- Prediction: Grad4yr (75%)\n";
      if (v == PromptVariant::kWithKb) b.response += "- " + kb().best_practices[0].text + "\n";
      out.push_back(b);
    }
  }
  return out;
}

nlohmann::json rating(const std::string& bundle, const std::string& rater, int clarity = 4) {
  nlohmann::json s;
  for (auto d : kDimensions) s[std::string(to_string(d))] = 4;
  s["Clarity"] = clarity;
  return {{"bundle_id", bundle}, {"rater_id", rater}, {"scores", s}};
}

ReviewService make_service() {
  const auto bundles = fixture_bundles();
  return ReviewService(AssessmentSession::create(bundles, {"cm1", "cm2", "cm3"}, "s1"), bundles,
                       kb(), "");
}

TEST_CASE("endpoints follow the contract") {
  auto svc = make_service();
  const auto bundles = fixture_bundles();

  CHECK(svc.handle("GET", "/healthz", {}, "").status == 200);
  const auto session = svc.handle("GET", "/api/session", {}, "");
  CHECK(session.status == 200);
  CHECK(session.body["item_count"] == 6);

  auto list = svc.handle("GET", "/api/explanations", {{"rater", "cm1"}}, "");
  CHECK(list.status == 200);
  CHECK(list.body["pending"].size() == 6);
  CHECK(svc.handle("GET", "/api/explanations", {}, "").status == 400);
  CHECK(svc.handle("GET", "/api/explanations", {{"rater", "zz"}}, "").status == 404);

  const auto ok = svc.handle("POST", "/api/ratings", {}, rating(bundles[0].bundle_id, "cm1").dump());
  CHECK(ok.status == 201);
  CHECK(ok.body["rating_id"] == "r00001");
  list = svc.handle("GET", "/api/explanations", {{"rater", "cm1"}}, "");
  CHECK(list.body["pending"].size() == 5);
  CHECK(list.body["completed"] == 1);

  const auto zero = svc.handle("POST", "/api/ratings", {}, rating(bundles[1].bundle_id, "cm1", 0).dump());
  CHECK(zero.status == 400);
  CHECK(zero.body["error"]["pointer"] == "/scores/Clarity");

  CHECK(svc.handle("POST", "/api/ratings", {}, rating(bundles[0].bundle_id, "cm1").dump()).status == 409);
  CHECK(svc.handle("POST", "/api/ratings", {}, rating("nope", "cm1").dump()).status == 404);
  CHECK(svc.handle("POST", "/api/ratings", {}, rating(bundles[0].bundle_id, "ghost").dump()).status == 400);
  CHECK(svc.handle("POST", "/api/ratings", {}, "{not json").status == 400);
  CHECK(svc.handle("GET", "/api/ratings", {}, "").status == 405);
  CHECK(svc.handle("GET", "/api/nothing", {}, "").status == 404);

  const auto summary = svc.handle("GET", "/api/summary", {}, "");
  CHECK(summary.status == 200);
  CHECK(summary.body["ratings"] == 1);
  CHECK(summary.body["dimensions"][4]["dimension"] == "Clarity");
}

TEST_CASE("store failures surface as 500") {
  const auto bundles = fixture_bundles();
  const auto dir = std::filesystem::temp_directory_path() / "pathwise_unwritable_dir";
  std::filesystem::create_directories(dir);
  // A directory cannot be opened for appending.
  ReviewService svc(AssessmentSession::create(bundles, {"cm1"}, "s"), bundles, kb(), dir.string());
  CHECK(svc.handle("POST", "/api/ratings", {}, rating(bundles[0].bundle_id, "cm1").dump()).status == 500);
  std::filesystem::remove_all(dir);
}

TEST_CASE("no rater-facing payload reveals the variant or knowledge base") {
  auto svc = make_service();
  const auto bundles = fixture_bundles();
  for (const auto& b : bundles) {
    const bool kb_in_prompt = b.prompt.find(kb().best_practices[0].text) != std::string::npos;
    CHECK(kb_in_prompt == (b.variant == PromptVariant::kWithKb));
  }
  std::vector<nlohmann::json> payloads = {svc.session().body, svc.summary().body};
  for (const auto& rater : {"cm1", "cm2", "cm3"}) {
    payloads.push_back(svc.explanations(std::string(rater)).body);
  }
  payloads.push_back(svc.post_rating(rating(bundles[1].bundle_id, "cm2").dump()).body);
  payloads.push_back(svc.summary().body);
  for (const auto& p : payloads) {
    CHECK(is_blind(p, &kb()));
    CHECK(p.dump().find("\"variant\"") == std::string::npos);
    for (const auto& e : kb().best_practices) CHECK(p.dump().find(e.text) == std::string::npos);
  }
}

TEST_CASE("http binding with CORS") {
  auto svc = make_service();
  httplib::Server server;
  bind_routes(server, svc, "http://localhost:5173");
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/healthz");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");
  res = client.Get("/api/explanations?rater=cm2");
  REQUIRE(res);
  const auto body = nlohmann::json::parse(res->body);
  CHECK(body["pending"].size() == 6);
  res = client.Post("/api/ratings", rating(body["pending"][0]["bundle_id"], "cm2").dump(),
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  res = client.Options("/api/ratings");
  REQUIRE(res);
  CHECK(res->status == 204);
  server.stop();
  t.join();
}

}  // namespace
}  // namespace pathwise
