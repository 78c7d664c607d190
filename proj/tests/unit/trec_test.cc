// Copyright 2026-present the mor project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mor/trec.h"

#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "mor/error.h"
#include "support/generators.h"

namespace mor {
namespace {

TEST(TrecTest, ParsesAndSortsByRank) {
  std::istringstream in("q1 Q0 b 2 0.5 t\nq1 Q0 a 1 0.9 t\nq2 Q0 c 1 1 t\n");
  const mor::Run run = read_run(in);
  EXPECT_EQ(run.tag, "t");
  EXPECT_EQ(run.ranking("q1"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(run.ranking("q2"), std::vector<std::string>{"c"});
  EXPECT_TRUE(run.ranking("q3").empty());
}

TEST(TrecTest, MalformedLinesCarryLineNumbers) {
  for (const char* bad : {"q1 Q0 a 1 0.5 t\nq1 Q0 b x 0.5 t\n",
                          "q1 Q0 a 1 0.5 t\nq1 Q0 b 2 0.5\n",
                          "q1 Q0 a 1 0.5 t\nq1 Q0 b 2 nope t\n"}) {
    std::istringstream in(bad);
    try {
      read_run(in, "r.run");
      ADD_FAILURE() << "expected ParseError for " << bad;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u);
    }
  }
}

TEST(TrecTest, RoundTripIsByteIdentical) {
  testing::Gen gen(77);
  mor::Run run;
  run.tag = "mor-post(0.1,0.3,0.6)";
  for (int q = 0; q < 5; ++q) {
    auto& list = run.queries["q" + std::to_string(q)];
    for (std::size_t r = 1; r <= 8; ++r) {
      list.push_back({"d" + std::to_string(gen.size(0, 999)) + "_" + std::to_string(r),
                      gen.uniform(-1, 1) / 3.0, r});
    }
  }
  std::ostringstream first;
  write_run(first, run);
  std::istringstream in(first.str());
  const mor::Run back = read_run(in);
  EXPECT_EQ(back.queries, run.queries);
  std::ostringstream second;
  write_run(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(TrecTest, FormatDoubleRoundTrips) {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, -2.5e17,
                   std::numeric_limits<double>::max()}) {
    EXPECT_EQ(std::stod(format_double(v)), v) << format_double(v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(TrecTest, MissingFileIsIoError) {
  EXPECT_THROW(read_run(std::filesystem::path("/nonexistent/x.run")), IoError);
}

}  // namespace
}  // namespace mor
