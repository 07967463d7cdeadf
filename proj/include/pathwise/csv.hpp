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

#ifndef PATHWISE_CSV_HPP_
#define PATHWISE_CSV_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pathwise::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number in the source for each row, for error messages.
  std::vector<std::size_t> line_numbers;
};

// Reads comma-separated text with an optional RFC 4180 quoting. Lines that
// start with '#' are comments and are skipped, as are blank lines. Throws
// ValidationError on unterminated quotes or ragged rows.
Table read(std::istream& in);
Table read_file(const std::string& path);

// Quotes a field when it contains a comma, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace pathwise::csv

#endif  // PATHWISE_CSV_HPP_
