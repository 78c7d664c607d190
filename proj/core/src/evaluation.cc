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

#include "mor/evaluation.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "mor/error.h"

namespace mor {

namespace {

double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

double discount(std::size_t rank) {
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

void check_unique(std::span<const std::string> ranking) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(ranking.size());
  for (const auto& id : ranking) {
    if (!seen.insert(id).second) {
      throw ContractError("ranking contains '" + id + "' twice");
    }
  }
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string Metric::name() const {
  return (kind == Kind::kNdcg ? "ndcg@" : "recall@") + std::to_string(k);
}

Metric Metric::parse(std::string_view name) {
  const auto at = name.find('@');
  if (at == std::string_view::npos) {
    throw ConfigError("metric '" + std::string(name) + "' lacks '@k'");
  }
  Metric m;
  const auto kind = name.substr(0, at);
  if (kind == "ndcg") {
    m.kind = Kind::kNdcg;
  } else if (kind == "recall") {
    m.kind = Kind::kRecall;
  } else {
    throw ConfigError("unknown metric '" + std::string(name) + "'");
  }
  const auto ks = name.substr(at + 1);
  auto [p, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), m.k);
  if (ec != std::errc() || p != ks.data() + ks.size() || m.k == 0) {
    throw ConfigError("metric '" + std::string(name) + "' has a bad cutoff");
  }
  return m;
}

NdcgResult ndcg_at_k(std::span<const std::string> ranking,
                     const Qrels::Grades* grades, std::size_t k) {
  if (k == 0) throw ContractError("ndcg_at_k requires k >= 1");
  check_unique(ranking);
  std::vector<int> ideal;
  if (grades != nullptr) {
    for (const auto& [doc, g] : *grades) {
      if (g > 0) ideal.push_back(g);
    }
  }
  if (ideal.empty()) return {0.0, true};
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) {
    idcg += gain(ideal[r]) * discount(r + 1);
  }
  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
    auto it = grades->find(ranking[r]);
    if (it != grades->end() && it->second > 0) {
      dcg += gain(it->second) * discount(r + 1);
    }
  }
  return {dcg / idcg, false};
}

double recall_at_k(std::span<const std::string> ranking,
                   const Qrels::Grades* grades, std::size_t k) {
  if (k == 0) throw ContractError("recall_at_k requires k >= 1");
  check_unique(ranking);
  if (grades == nullptr) return 0.0;
  std::size_t relevant = 0;
  for (const auto& [doc, g] : *grades) relevant += g > 0 ? 1 : 0;
  if (relevant == 0) return 0.0;
  std::size_t found = 0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
    auto it = grades->find(ranking[r]);
    if (it != grades->end() && it->second > 0) ++found;
  }
  return static_cast<double>(found) / static_cast<double>(relevant);
}

double evaluate_metric(const Metric& metric,
                       std::span<const std::string> ranking,
                       const Qrels::Grades* grades) {
  switch (metric.kind) {
    case Metric::Kind::kNdcg:
      return ndcg_at_k(ranking, grades, metric.k).value;
    case Metric::Kind::kRecall:
      return recall_at_k(ranking, grades, metric.k);
  }
  return 0.0;
}

std::vector<std::vector<double>> win_rate_matrix(
    std::span<const RankingSet> systems, const Qrels& qrels, std::size_t k) {
  const std::size_t n = systems.size();
  std::vector<std::vector<double>> wins(n, std::vector<double>(n, 0.0));
  std::size_t counted = 0;
  std::vector<bool> hit(n);
  for (const auto& [qid, grades] : qrels.judgments()) {
    if (qrels.relevant_count(qid) == 0) continue;
    ++counted;
    for (std::size_t s = 0; s < n; ++s) {
      hit[s] = false;
      auto it = systems[s].find(qid);
      if (it == systems[s].end()) continue;
      const auto& ranking = it->second;
      for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
        auto g = grades.find(ranking[r]);
        if (g != grades.end() && g->second > 0) {
          hit[s] = true;
          break;
        }
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (hit[a] && !hit[b]) wins[a][b] += 1.0;
      }
    }
  }
  if (counted > 0) {
    for (auto& row : wins) {
      for (double& v : row) v /= static_cast<double>(counted);
    }
  }
  return wins;
}

std::vector<std::string> collapse_chunk_ranking(
    std::span<const std::string> ranking, const Corpus& corpus) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& id : ranking) {
    auto row = corpus.row(id);
    const std::string& parent = row ? corpus.original_id(*row) : id;
    if (seen.insert(parent).second) out.push_back(parent);
  }
  return out;
}

EvalReport evaluate_run(const Run& run, const Qrels& qrels,
                        std::span<const Metric> metrics, const Corpus* corpus) {
  EvalReport report;
  report.run_tag = run.tag;
  report.metrics.assign(metrics.begin(), metrics.end());
  for (const auto& [qid, entries] : run.queries) {
    if (qrels.find(qid) == nullptr) {
      std::cerr << "warning: run '" << run.tag << "' has unjudged query '"
                << qid << "', skipped\n";
      report.unknown_queries.push_back(qid);
    }
  }
  for (const auto& [qid, grades] : qrels.judgments()) {
    if (qrels.relevant_count(qid) == 0) {
      report.no_relevant_queries.push_back(qid);
      continue;
    }
    std::vector<std::string> ranking = run.ranking(qid);
    if (corpus != nullptr && corpus->has_chunks()) {
      ranking = collapse_chunk_ranking(ranking, *corpus);
    }
    if (ranking.empty()) report.empty_queries.push_back(qid);
    std::vector<double> values;
    values.reserve(metrics.size());
    for (const auto& m : metrics) {
      values.push_back(evaluate_metric(m, ranking, &grades));
    }
    report.per_query.emplace(qid, std::move(values));
  }
  report.aggregates.assign(metrics.size(), 0.0);
  for (const auto& [qid, values] : report.per_query) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      report.aggregates[i] += values[i];
    }
  }
  if (!report.per_query.empty()) {
    for (double& v : report.aggregates) {
      v /= static_cast<double>(report.per_query.size());
    }
  }
  return report;
}

std::vector<double> macro_average(std::span<const EvalReport> reports) {
  if (reports.empty()) return {};
  const auto& metrics = reports.front().metrics;
  std::vector<double> out(metrics.size(), 0.0);
  for (const auto& r : reports) {
    if (r.metrics != metrics) {
      throw ContractError("macro_average: reports use different metrics");
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += r.aggregates[i];
  }
  for (double& v : out) v /= static_cast<double>(reports.size());
  return out;
}

void write_report_tsv(std::ostream& out, const EvalReport& report) {
  out << "query_id";
  for (const auto& m : report.metrics) out << '\t' << m.name();
  out << '\n';
  for (const auto& [qid, values] : report.per_query) {
    out << qid;
    for (double v : values) out << '\t' << fixed4(v);
    out << '\n';
  }
  out << "all";
  for (double v : report.aggregates) out << '\t' << fixed4(v);
  out << '\n';
}

std::string format_comparison_table(std::span<const EvalReport> reports) {
  std::ostringstream out;
  if (reports.empty()) return {};
  std::size_t width = 4;
  for (const auto& r : reports) width = std::max(width, r.run_tag.size());
  const auto& metrics = reports.front().metrics;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  out << pad("run", width);
  for (const auto& m : metrics) out << "  " << pad(m.name(), 10);
  out << "  queries\n";
  out << std::string(width + metrics.size() * 12 + 9, '-') << '\n';
  for (const auto& r : reports) {
    out << pad(r.run_tag, width);
    for (double v : r.aggregates) out << "  " << pad(fixed4(v), 10);
    out << "  " << r.per_query.size() << '\n';
  }
  return out.str();
}

}  // namespace mor
