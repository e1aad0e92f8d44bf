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

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "pmqa/csv.hpp"
#include "pmqa/error.hpp"

namespace pmqa::csv {
namespace {

TEST(Csv, ParsesQuotedFields) {
  const auto t = parse("a,b,c\r\n1,\"x, y\",\"he said \"\"hi\"\"\"\n2,\"multi\nline\",\n");
  ASSERT_EQ(t.header, (Row{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x, y");
  EXPECT_EQ(t.rows[0][2], "he said \"hi\"");
  EXPECT_EQ(t.rows[1][1], "multi\nline");
  EXPECT_EQ(t.rows[1][2], "");
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_FALSE(t.has_column("d"));
  EXPECT_THROW(t.column("d"), FormatError);
}

TEST(Csv, RejectsRaggedAndUnterminated) {
  EXPECT_THROW(parse("a,b\n1\n"), FormatError);
  EXPECT_THROW(parse("a,b\n1,\"2\n"), FormatError);
}

TEST(Csv, EscapeOnlyWhenNeeded) {
  EXPECT_EQ(escape("plain"), "plain");
  EXPECT_EQ(escape("a,b"), "\"a,b\"");
  EXPECT_EQ(escape("q\""), "\"q\"\"\"");
  EXPECT_EQ(format_row({"x", "y z"}), "x,y z\n");
}

TEST(Csv, RandomRoundTrip) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "ab ,\"\n\r1";
  for (int trial = 0; trial < 200; ++trial) {
    Table t;
    const std::size_t width = 1 + rng() % 4;
    for (std::size_t c = 0; c < width; ++c) t.header.push_back("h" + std::to_string(c));
    for (std::size_t r = 0; r < rng() % 5; ++r) {
      Row row;
      for (std::size_t c = 0; c < width; ++c) {
        std::string f;
        for (std::size_t k = 0; k < rng() % 6; ++k) f += alphabet[rng() % alphabet.size()];
        row.push_back(f);
      }
      t.rows.push_back(row);
    }
    const auto back = parse(format(t));
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
  }
}

TEST(Csv, FileWriteRead) {
  const auto path = std::filesystem::temp_directory_path() / "pmqa_csv_test.csv";
  Table t{{"k", "v"}, {{"1", "one"}, {"2", "t,wo"}}};
  write(path, t);
  const auto back = read(path);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_THROW(read(path.string() + ".missing"), IoError);
}

}  // namespace
}  // namespace pmqa::csv
