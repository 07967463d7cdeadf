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

// Review service behind the rating UI. Handlers are plain functions of the
// request so they can be exercised without a socket; bind_routes attaches
// them to an httplib server.

#ifndef PATHWISE_SERVICE_HPP_
#define PATHWISE_SERVICE_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathwise/explain.hpp"
#include "pathwise/usability.hpp"

namespace httplib {
class Server;
}

namespace pathwise {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// {"error": {"code", "message", "pointer"?}}
ApiResponse api_error(int status, const std::string& code, const std::string& message,
                      const std::string& pointer = {});

class ReviewService {
 public:
  // Ratings are persisted to `ratings_path` (JSON Lines); empty keeps them
  // in memory. Throws ValidationError if a session item has no bundle.
  ReviewService(AssessmentSession session, std::vector<ExplanationBundle> bundles,
                std::optional<KnowledgeBase> kb, const std::string& ratings_path);

  ApiResponse session() const;
  ApiResponse explanations(const std::optional<std::string>& rater) const;
  ApiResponse post_rating(const std::string& body);
  ApiResponse summary() const;
  ApiResponse health() const;

  // Routes one request; unknown paths give 404, wrong methods 405.
  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& query,
                     const std::string& body);

  const RatingStore& store() const { return store_; }

 private:
  const KnowledgeBase* kb() const { return kb_ ? &*kb_ : nullptr; }

  AssessmentSession session_;
  std::map<std::string, ExplanationBundle> bundles_;
  std::optional<KnowledgeBase> kb_;
  RatingStore store_;
};

// Registers every endpoint plus CORS preflight handling for `cors_origin`.
void bind_routes(httplib::Server& server, ReviewService& service,
                 const std::string& cors_origin = "*");

}  // namespace pathwise

#endif  // PATHWISE_SERVICE_HPP_
