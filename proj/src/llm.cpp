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

#include "pathwise/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "pathwise/rng.hpp"

namespace pathwise {

std::string with_retries(const std::function<std::string()>& fn,
                         const GenerationSettings& settings) {
  int delay = std::max(0, settings.backoff_ms);
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (attempt >= settings.retries) {
        throw BackendError(std::string(e.what()) + " (after " +
                           std::to_string(attempt + 1) + " attempts)");
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    delay *= 2;
  }
}

MockBackend::MockBackend(std::uint64_t seed, Responder responder)
    : seed_(seed), responder_(std::move(responder)) {}

std::string MockBackend::identity() const {
  return "mock:" + std::to_string(seed_);
}

std::string MockBackend::canned_response(const std::string& label,
                                         int probability_percent) {
  return "- Prediction: " + label + " (" + std::to_string(probability_percent) +
         "%)\n"
         "- Tabulate Predictions: each split on the path is compared with the "
         "student's value.\n"
         "- Key Drivers: the splits nearest the root carry the most weight.\n"
         "- Potential Ambiguities: values close to a split point could change "
         "the outcome.\n"
         "- Final Highlights for Advisers: review the drivers above with the "
         "student.\n";
}

std::string MockBackend::complete(const std::string& prompt,
                                  const GenerationSettings& settings) {
  if (responder_) return responder_(prompt);
  std::uint64_t h = fnv1a(std::to_string(seed_) + "|" +
                          std::to_string(settings.temperature) + "|" +
                          std::to_string(settings.max_tokens));
  h = fnv1a(prompt, h);
  const bool at_risk = h % 4 == 0;
  const int pct = 50 + static_cast<int>((h >> 8) % 50);
  return canned_response(at_risk ? "NoGrad4yr" : "Grad4yr", pct);
}

HttpBackend::HttpBackend(std::string url, std::string model,
                         std::optional<std::string> api_key)
    : model_(std::move(model)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw ValidationError("backend URL must look like http(s)://host[:port][/path]: '" +
                          url + "'");
  }
  scheme_host_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
  if (api_key) {
    api_key_ = *api_key;
  } else if (const char* env = std::getenv("LLM_API_KEY")) {
    api_key_ = env;
  }
}

std::string HttpBackend::identity() const {
  return "http:" + model_ + "@" + scheme_host_ + path_;
}

void HttpBackend::audit(const std::string& line) {
  if (audit_ == nullptr) return;
  std::lock_guard lock(audit_mutex_);
  *audit_ << line << '\n';
  audit_->flush();
}

std::string HttpBackend::attempt(const std::string& body,
                                 const GenerationSettings& settings) {
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(settings.timeout_seconds, 0);
  client.set_read_timeout(settings.timeout_seconds, 0);
  client.set_write_timeout(settings.timeout_seconds, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  nlohmann::json request_log = {
      {"direction", "request"},
      {"url", scheme_host_ + path_},
      {"authorization", api_key_.empty() ? "none" : "Bearer [redacted]"},
      {"body", nlohmann::json::parse(body)}};
  audit(request_log.dump());

  const auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    audit(nlohmann::json{{"direction", "response"},
                         {"transport_error", httplib::to_string(res.error())}}
              .dump());
    throw BackendError("request to " + scheme_host_ + path_ + " failed: " +
                       httplib::to_string(res.error()));
  }
  std::string logged = res->body;
  if (!api_key_.empty()) {
    for (auto at = logged.find(api_key_); at != std::string::npos;
         at = logged.find(api_key_, at)) {
      logged.replace(at, api_key_.size(), "[redacted]");
    }
  }
  audit(nlohmann::json{{"direction", "response"}, {"status", res->status}, {"body", logged}}
            .dump());
  if (res->status != 200) {
    throw BackendError("backend returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("unexpected backend response: ") + e.what());
  }
}

std::string HttpBackend::complete(const std::string& prompt,
                                  const GenerationSettings& settings) {
  const nlohmann::json body = {
      {"model", model_},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", settings.temperature},
      {"max_tokens", settings.max_tokens}};
  // Retries are applied by the caller.
  return attempt(body.dump(), settings);
}

}  // namespace pathwise
