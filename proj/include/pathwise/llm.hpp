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

// Pluggable text-completion backends: a deterministic mock for tests and
// offline runs, and an HTTP client for OpenAI-style chat endpoints.

#ifndef PATHWISE_LLM_HPP_
#define PATHWISE_LLM_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>

#include "pathwise/error.hpp"

namespace pathwise {

struct GenerationSettings {
  double temperature = 0.0;
  int max_tokens = 1024;
  int retries = 2;             // extra attempts after the first failure
  int backoff_ms = 250;        // doubled after every failed attempt
  int timeout_seconds = 60;
};

// Raised when a backend cannot produce a response.
class BackendError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  virtual std::string identity() const = 0;
  // Must be safe to call from several threads at once.
  virtual std::string complete(const std::string& prompt,
                               const GenerationSettings& settings) = 0;
};

// Pure function of (prompt, settings, seed). Without a responder the reply
// is a fixed explanation skeleton whose predicted class and probability
// are derived from a hash of the prompt.
class MockBackend : public LlmBackend {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;

  explicit MockBackend(std::uint64_t seed = 0, Responder responder = nullptr);

  std::string identity() const override;
  std::string complete(const std::string& prompt,
                       const GenerationSettings& settings) override;

  // The canned reply used when no responder is installed.
  static std::string canned_response(const std::string& label,
                                     int probability_percent);

 private:
  std::uint64_t seed_;
  Responder responder_;
};

// POSTs {"model", "messages", "temperature", "max_tokens"} to `url` and
// reads choices[0].message.content. The bearer token comes from the
// LLM_API_KEY environment variable unless given explicitly. When an audit
// stream is set, every request and response body is written to it with the
// credential redacted.
class HttpBackend : public LlmBackend {
 public:
  HttpBackend(std::string url, std::string model,
              std::optional<std::string> api_key = std::nullopt);

  void set_audit_log(std::ostream* out) { audit_ = out; }

  std::string identity() const override;
  std::string complete(const std::string& prompt,
                       const GenerationSettings& settings) override;

 private:
  std::string attempt(const std::string& body,
                      const GenerationSettings& settings);
  void audit(const std::string& line);

  std::string scheme_host_;
  std::string path_;
  std::string model_;
  std::string api_key_;
  std::ostream* audit_ = nullptr;
  std::mutex audit_mutex_;
};

// Runs fn() with the retry policy from `settings`; BackendError is retried,
// anything else propagates immediately.
std::string with_retries(const std::function<std::string()>& fn,
                         const GenerationSettings& settings);

}  // namespace pathwise

#endif  // PATHWISE_LLM_HPP_
