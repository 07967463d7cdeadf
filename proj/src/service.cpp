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

#include "pathwise/service.hpp"

#include <algorithm>

#include "httplib.h"

namespace pathwise {

ApiResponse api_error(int status, const std::string& code, const std::string& message,
                      const std::string& pointer) {
  nlohmann::json err = {{"code", code}, {"message", message}};
  if (!pointer.empty()) err["pointer"] = pointer;
  return {status, {{"error", err}}};
}

ReviewService::ReviewService(AssessmentSession session, std::vector<ExplanationBundle> bundles,
                             std::optional<KnowledgeBase> kb, const std::string& ratings_path)
    : session_(std::move(session)),
      kb_(std::move(kb)),
      store_(ratings_path, session_.bundle_ids()) {
  for (auto& b : bundles) {
    const std::string id = b.bundle_id;
    bundles_.emplace(id, std::move(b));
  }
  for (const auto& item : session_.items) {
    if (!bundles_.count(item.bundle_id)) {
      throw ValidationError("session refers to bundle '" + item.bundle_id +
                            "' missing from the bundle store");
    }
  }
}

ApiResponse ReviewService::session() const { return {200, blinded_session_view(session_)}; }

ApiResponse ReviewService::explanations(const std::optional<std::string>& rater) const {
  if (!rater || rater->empty()) {
    return api_error(400, "missing_rater", "query parameter 'rater' is required", "/rater");
  }
  if (std::find(session_.raters.begin(), session_.raters.end(), *rater) ==
      session_.raters.end()) {
    return api_error(404, "unknown_rater", "rater '" + *rater + "' is not in this session",
                     "/rater");
  }
  nlohmann::json pending = nlohmann::json::array();
  std::size_t done = 0;
  for (const auto* item : session_.order_for(*rater)) {
    if (store_.has(item->bundle_id, *rater)) {
      ++done;
      continue;
    }
    pending.push_back(blinded_bundle_view(bundles_.at(item->bundle_id), kb()));
  }
  return {200,
          {{"rater", *rater},
           {"total", session_.items.size()},
           {"completed", done},
           {"pending", pending}}};
}

ApiResponse ReviewService::post_rating(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return api_error(400, "invalid_json", e.what());
  }
  try {
    auto record = RatingRecord::from_json(j);
    if (std::find(session_.raters.begin(), session_.raters.end(), record.rater_id) ==
        session_.raters.end()) {
      return api_error(400, "unknown_rater",
                       "rater '" + record.rater_id + "' is not in this session", "/rater_id");
    }
    // Ids and timestamps are always assigned by the server.
    record.rating_id.clear();
    record.submitted_at.clear();
    const auto stored = store_.add(std::move(record));
    return {201, {{"rating_id", stored.rating_id}, {"rating", stored.to_json()}}};
  } catch (const UnknownBundleError& e) {
    return api_error(404, "unknown_bundle", e.what(), e.pointer());
  } catch (const DuplicateRatingError& e) {
    return api_error(409, "duplicate_rating", e.what(), e.pointer());
  } catch (const ValidationError& e) {
    return api_error(400, "invalid_rating", e.what(), e.pointer());
  } catch (const std::exception& e) {
    return api_error(500, "store_failure", e.what());
  }
}

ApiResponse ReviewService::summary() const {
  const auto ratings = store_.snapshot();
  nlohmann::json dims = nlohmann::json::array();
  if (!ratings.empty()) dims = summary_json(summarize(ratings));
  return {200, {{"ratings", ratings.size()}, {"dimensions", dims}}};
}

ApiResponse ReviewService::health() const { return {200, {{"status", "ok"}}}; }

ApiResponse ReviewService::handle(const std::string& method, const std::string& path,
                                  const std::map<std::string, std::string>& query,
                                  const std::string& body) {
  auto only = [&](const char* allowed) -> std::optional<ApiResponse> {
    if (method == allowed) return std::nullopt;
    return api_error(405, "method_not_allowed", method + " is not allowed on " + path);
  };
  if (path == "/healthz") return only("GET").value_or(health());
  if (path == "/api/session") return only("GET").value_or(session());
  if (path == "/api/summary") return only("GET").value_or(summary());
  if (path == "/api/explanations") {
    if (auto e = only("GET")) return *e;
    const auto it = query.find("rater");
    return explanations(it == query.end() ? std::nullopt : std::optional(it->second));
  }
  if (path == "/api/ratings") {
    if (auto e = only("POST")) return *e;
    return post_rating(body);
  }
  return api_error(404, "not_found", "no route for " + path);
}

void bind_routes(httplib::Server& server, ReviewService& service,
                 const std::string& cors_origin) {
  auto reply = [cors_origin](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_header("Access-Control-Allow-Origin", cors_origin);
    res.set_content(api.body.dump(), "application/json; charset=utf-8");
  };
  auto route = [&service, reply](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    ApiResponse api;
    try {
      api = service.handle(req.method, req.path, query, req.body);
    } catch (const std::exception& e) {
      api = api_error(500, "internal", e.what());
    }
    reply(res, api);
  };
  for (const char* p : {"/healthz", "/api/session", "/api/summary", "/api/explanations",
                        "/api/ratings"}) {
    server.Get(p, route);
    server.Post(p, route);
    server.Options(p, [cors_origin](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
      res.set_header("Access-Control-Allow-Origin", cors_origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }
}

}  // namespace pathwise
