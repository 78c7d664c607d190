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

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mor {

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const RankedDoc&, const RankedDoc&) = default;
};

/// A ranked result list per query, as stored in a TREC run file.
struct Run {
  std::string tag;
  std::map<std::string, std::vector<RankedDoc>> queries;

  std::vector<std::string> ranking(const std::string& query_id) const;
};

/// Parses "query_id Q0 doc_id rank score run_tag" lines. Each query's list is
/// returned in rank order; throws ParseError (with line) on malformed lines.
Run read_run(std::istream& in, const std::string& source = "<stream>");
Run read_run(const std::filesystem::path& path);

/// Writes one line per entry. Scores use the shortest representation that
/// round-trips, so rewriting a parsed run is byte-identical.
void write_run(std::ostream& out, const Run& run);
void write_run(const std::filesystem::path& path, const Run& run);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace mor
