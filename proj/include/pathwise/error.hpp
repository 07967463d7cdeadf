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

#ifndef PATHWISE_ERROR_HPP_
#define PATHWISE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace pathwise {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, violated preconditions, schema mismatches.
// The CLI maps these to exit status 1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message,
                           std::string pointer = {})
      : Error(message), pointer_(std::move(pointer)) {}

  // JSON-pointer-like location of the offending field, if known.
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

// Failures of the environment (I/O, backend transport). Exit status 2.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace pathwise

#endif  // PATHWISE_ERROR_HPP_
