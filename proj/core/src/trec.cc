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

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "io_util.h"
#include "mor/error.h"

namespace mor {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return {buf, ptr};
}

std::vector<std::string> Run::ranking(const std::string& query_id) const {
  std::vector<std::string> out;
  auto it = queries.find(query_id);
  if (it == queries.end()) return out;
  out.reserve(it->second.size());
  for (const auto& e : it->second) out.push_back(e.doc_id);
  return out;
}

Run read_run(std::istream& in, const std::string& source) {
  Run run;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(std::move(f));
    if (cols.empty()) continue;
    if (cols.size() != 6) {
      throw ParseError(source, lineno,
                       "expected 6 columns, got " + std::to_string(cols.size()));
    }
    RankedDoc e;
    e.doc_id = cols[2];
    {
      const auto& s = cols[3];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), e.rank);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError(source, lineno, "rank '" + s + "' is not an integer");
      }
    }
    {
      const auto& s = cols[4];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), e.score);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError(source, lineno, "score '" + s + "' is not a number");
      }
    }
    if (run.tag.empty()) run.tag = cols[5];
    run.queries[cols[0]].push_back(std::move(e));
  }
  for (auto& [qid, entries] : run.queries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const RankedDoc& a, const RankedDoc& b) {
                       return a.rank < b.rank;
                     });
  }
  return run;
}

Run read_run(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_run(in, path.string());
}

void write_run(std::ostream& out, const Run& run) {
  const std::string tag = run.tag.empty() ? "mor" : run.tag;
  for (const auto& [qid, entries] : run.queries) {
    for (const auto& e : entries) {
      out << qid << " Q0 " << e.doc_id << ' ' << e.rank << ' '
          << format_double(e.score) << ' ' << tag << '\n';
    }
  }
}

void write_run(const std::filesystem::path& path, const Run& run) {
  auto out = detail::open_output(path);
  write_run(out, run);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mor
