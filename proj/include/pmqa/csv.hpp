// Copyright 2026 The pmqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PMQA_CSV_HPP_
#define PMQA_CSV_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pmqa::csv {

using Row = std::vector<std::string>;

// A header row plus data rows, all of the header's width.
struct Table {
  Row header;
  std::vector<Row> rows;

  // Index of a header column; throws FormatError if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

// RFC 4180: comma separated, double-quoted fields may contain commas,
// quotes ("") and newlines. Accepts LF or CRLF line ends. Throws FormatError
// on ragged rows or an unterminated quote.
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

// Quotes a field only when it needs it.
std::string escape(std::string_view field);
std::string format_row(const Row& row);
std::string format(const Table& table);
// Writes atomically through a temporary sibling file.
void write(const std::filesystem::path& path, const Table& table);

}  // namespace pmqa::csv

#endif  // PMQA_CSV_HPP_
