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

#include "mor/fusion.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mor/error.h"

namespace mor {

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw ContractError(std::string(what) + ": non-finite value");
    }
  }
}

std::string short_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

FusedRun ranked_from(const std::string& query_id,
                     std::span<const double> scores, const IdList& ids,
                     std::size_t depth) {
  FusedRun run;
  run.query_id = query_id;
  if (scores.empty()) return run;
  const std::size_t k = depth == 0 ? scores.size() : depth;
  const auto rows = top_k_rows(scores, ids, k);
  run.ranked.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    run.ranked.push_back({ids[rows[i]], scores[rows[i]], i + 1});
  }
  return run;
}

}  // namespace

void Coefficients::validate() const {
  for (double v : {a, b, c}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ContractError("coefficients must be finite and non-negative, got " +
                          label());
    }
  }
}

std::string Coefficients::label() const {
  return "(" + short_number(a) + "," + short_number(b) + "," +
         short_number(c) + ")";
}

bool WeightAllocation::degenerate() const {
  return std::none_of(weights.begin(), weights.end(),
                      [](double w) { return w > 0.0; });
}

WeightAllocation weight_pre(const std::string& query_id,
                            std::span<const SignalBundle> signals) {
  WeightAllocation out{query_id, "pre", {}, {}};
  out.weights.reserve(signals.size());
  for (const auto& s : signals) {
    if (!std::isfinite(s.v_pre) || s.v_pre < 0.0) {
      throw ContractError("weight_pre: invalid v_pre for query '" + query_id +
                          "'");
    }
    out.weights.push_back(s.v_pre);
  }
  return out;
}

WeightAllocation weight_post(const std::string& query_id,
                             std::span<const SignalBundle> signals,
                             const Coefficients& coefficients) {
  coefficients.validate();
  WeightAllocation out{query_id, "post", {}, coefficients};
  out.weights.reserve(signals.size());
  for (const auto& s : signals) {
    const double w = coefficients.a * s.v_pre + coefficients.b * s.i_moran +
                     coefficients.c * s.v_post;
    if (!std::isfinite(w)) {
      throw ContractError("weight_post: non-finite weight for query '" +
                          query_id + "'");
    }
    out.weights.push_back(std::max(0.0, w));
  }
  return out;
}

WeightAllocation weight_equal(const std::string& query_id,
                              std::size_t members) {
  return {query_id, "mean", std::vector<double>(members, 1.0), {}};
}

Prerejection prereject(const WeightAllocation& allocation,
                       double threshold_percent) {
  if (!(threshold_percent >= 0.0 && threshold_percent <= 100.0)) {
    throw ContractError("prereject: threshold must lie in [0, 100]");
  }
  Prerejection out{allocation, 1.0, 0};
  auto& w = out.allocation.weights;
  const std::size_t before = static_cast<std::size_t>(
      std::count_if(w.begin(), w.end(), [](double x) { return x > 0.0; }));
  if (w.empty()) return out;
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  const double w_min = *lo;
  const double w_max = *hi;
  const std::size_t keep = static_cast<std::size_t>(
      std::max_element(w.begin(), w.end()) - w.begin());
  const double cut = w_min + threshold_percent / 100.0 * (w_max - w_min);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i != keep && w[i] < cut) w[i] = 0.0;
  }
  out.retained = static_cast<std::size_t>(
      std::count_if(w.begin(), w.end(), [](double x) { return x > 0.0; }));
  out.retained_fraction =
      before == 0 ? 1.0
                  : static_cast<double>(out.retained) /
                        static_cast<double>(before);
  return out;
}

std::vector<double> normalize(std::span<const double> scores) {
  if (scores.empty()) throw ContractError("normalize: empty score vector");
  check_finite(scores, "normalize");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo;
  const double range = *hi - min;
  std::vector<double> out(scores.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      out[i] = (scores[i] - min) / range;
    }
  }
  return out;
}

ScoreVector normalize(const ScoreVector& scores) {
  return {scores.query_id, scores.space_id, scores.ids,
          normalize(scores.values)};
}

std::vector<double> max_to_parents(std::span<const double> item_scores,
                                   std::span<const std::size_t> item_parent,
                                   std::size_t parent_count) {
  if (item_scores.size() != item_parent.size()) {
    throw ContractError("max_to_parents: scores and parents differ in length");
  }
  constexpr double kUnset = -std::numeric_limits<double>::infinity();
  std::vector<double> out(parent_count, kUnset);
  for (std::size_t i = 0; i < item_scores.size(); ++i) {
    const std::size_t p = item_parent[i];
    if (p >= parent_count) throw ContractError("max_to_parents: bad parent");
    out[p] = std::max(out[p], item_scores[i]);
  }
  for (double& v : out) {
    if (v == kUnset) v = 0.0;
  }
  return out;
}

std::vector<double> mean_of(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw ContractError("mean_of: no vectors");
  std::vector<double> out(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    if (v.size() != out.size()) throw ContractError("mean_of: size mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (double& x : out) x /= n;
  return out;
}

std::vector<double> max_of(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw ContractError("max_of: no vectors");
  std::vector<double> out = vectors.front();
  for (const auto& v : vectors.subspan(1)) {
    if (v.size() != out.size()) throw ContractError("max_of: size mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(out[i], v[i]);
  }
  return out;
}

ScoreVector collapse_chunks(const ScoreVector& chunk_scores,
                            const Corpus& corpus) {
  if (!chunk_scores.ids || *chunk_scores.ids != *corpus.ids()) {
    throw ContractError("collapse_chunks: scores are not over the corpus");
  }
  std::vector<std::string> parents;
  std::unordered_map<std::string, std::size_t> parent_row;
  std::vector<std::size_t> item_parent(corpus.size());
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const auto& id = corpus.original_id(r);
    auto [it, inserted] = parent_row.emplace(id, parents.size());
    if (inserted) parents.push_back(id);
    item_parent[r] = it->second;
  }
  ScoreVector out;
  out.query_id = chunk_scores.query_id;
  out.space_id = chunk_scores.space_id;
  out.values =
      max_to_parents(chunk_scores.values, item_parent, parents.size());
  out.ids = std::make_shared<IdList>(std::move(parents));
  return out;
}

std::vector<std::string> FusedRun::ranking() const {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& e : ranked) out.push_back(e.doc_id);
  return out;
}

FusedRun fuse(const std::string& query_id, std::span<const ScoreVector> scores,
              std::span<const double> weights, std::size_t depth) {
  if (scores.size() != weights.size()) {
    throw ContractError("fuse: " + std::to_string(scores.size()) +
                        " score vectors but " + std::to_string(weights.size()) +
                        " weights");
  }
  if (scores.empty()) throw ContractError("fuse: empty pool");
  const IdListPtr& ids = scores.front().ids;
  for (const auto& s : scores) {
    if (s.values.size() != ids->size() ||
        (s.ids != ids && !(s.ids && *s.ids == *ids))) {
      throw ContractError("fuse: score vectors differ in document universe");
    }
  }
  check_finite(weights, "fuse");
  // Accumulate in a canonical member order so the sums, and hence the
  // ranking, do not depend on how the pool was enumerated.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (scores[a].space_id != scores[b].space_id) {
                       return scores[a].space_id < scores[b].space_id;
                     }
                     return weights[a] < weights[b];
                   });
  std::vector<double> fused(ids->size(), 0.0);
  for (std::size_t m : order) {
    const double w = weights[m];
    if (w == 0.0) continue;
    const auto& v = scores[m].values;
    for (std::size_t d = 0; d < fused.size(); ++d) fused[d] += w * v[d];
  }
  FusedRun run = ranked_from(query_id, fused, *ids, depth);
  run.members.reserve(scores.size());
  for (const auto& s : scores) run.members.push_back(s.space_id);
  run.weights.assign(weights.begin(), weights.end());
  run.flagged = std::none_of(weights.begin(), weights.end(),
                             [](double w) { return w > 0.0; });
  return run;
}

FusedRun rrf(const std::string& query_id,
             std::span<const std::vector<std::string>> rank_lists, double k,
             std::size_t depth) {
  if (!(k > 0.0)) throw ContractError("rrf: k must be positive");
  std::map<std::string, double> score;
  for (const auto& list : rank_lists) {
    std::unordered_map<std::string_view, bool> seen;
    for (std::size_t r = 0; r < list.size(); ++r) {
      if (!seen.emplace(list[r], true).second) {
        throw ContractError("rrf: '" + list[r] + "' appears twice in a list");
      }
      score[list[r]] += 1.0 / (k + static_cast<double>(r + 1));
    }
  }
  std::vector<std::string> ids;
  std::vector<double> values;
  ids.reserve(score.size());
  values.reserve(score.size());
  for (auto& [id, s] : score) {
    ids.push_back(id);
    values.push_back(s);
  }
  const IdList universe(std::move(ids));
  return ranked_from(query_id, values, universe, depth);
}

std::optional<std::size_t> route_oracle_choice(
    std::span<const std::vector<std::string>> member_rankings,
    const Qrels::Grades* grades, const Metric& metric) {
  if (grades == nullptr) return std::nullopt;
  const bool any_relevant = std::any_of(
      grades->begin(), grades->end(), [](const auto& g) { return g.second > 0; });
  if (!any_relevant || member_rankings.empty()) return std::nullopt;
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t i = 0; i < member_rankings.size(); ++i) {
    const double v = evaluate_metric(metric, member_rankings[i], grades);
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

FusedRun route_oracle(std::span<const FusedRun> member_runs,
                      const Qrels::Grades* grades, const Metric& metric) {
  if (member_runs.empty()) throw ContractError("route_oracle: empty pool");
  std::vector<std::vector<std::string>> rankings;
  rankings.reserve(member_runs.size());
  for (const auto& r : member_runs) rankings.push_back(r.ranking());
  const auto choice = route_oracle_choice(rankings, grades, metric);
  FusedRun out = member_runs[choice.value_or(0)];
  out.members.clear();
  out.weights.assign(member_runs.size(), 0.0);
  for (std::size_t i = 0; i < member_runs.size(); ++i) {
    out.members.push_back(member_runs[i].members.empty()
                              ? std::to_string(i)
                              : member_runs[i].members.front());
  }
  out.weights[choice.value_or(0)] = 1.0;
  out.flagged = !choice.has_value();
  return out;
}

GranularityMerge parse_granularity_merge(std::string_view name) {
  if (name == "none") return GranularityMerge::kNone;
  if (name == "max") return GranularityMerge::kMax;
  if (name == "mean") return GranularityMerge::kMean;
  throw ConfigError("unknown granularity merge '" + std::string(name) + "'");
}

RetrieverMerge parse_retriever_merge(std::string_view name) {
  if (name == "mean") return RetrieverMerge::kMean;
  if (name == "pre") return RetrieverMerge::kPre;
  if (name == "post") return RetrieverMerge::kPost;
  throw ConfigError("unknown retriever merge '" + std::string(name) + "'");
}

std::string to_string(GranularityMerge m) {
  switch (m) {
    case GranularityMerge::kNone: return "none";
    case GranularityMerge::kMax: return "max";
    case GranularityMerge::kMean: return "mean";
  }
  return "?";
}

std::string to_string(RetrieverMerge m) {
  switch (m) {
    case RetrieverMerge::kMean: return "mean";
    case RetrieverMerge::kPre: return "pre";
    case RetrieverMerge::kPost: return "post";
  }
  return "?";
}

FusedRun merge_ablation(const std::string& query_id,
                        std::span<const std::string> groups,
                        std::span<const ScoreVector> scores,
                        std::span<const double> pre_weights,
                        std::span<const double> post_weights,
                        GranularityMerge granularity, RetrieverMerge retriever,
                        std::size_t depth) {
  const std::size_t n = scores.size();
  if (groups.size() != n || pre_weights.size() != n ||
      post_weights.size() != n) {
    throw ContractError("merge_ablation: inputs differ in pool size");
  }
  std::span<const double> member_weights =
      retriever == RetrieverMerge::kPost ? post_weights : pre_weights;

  std::vector<ScoreVector> merged;
  std::vector<double> weights;
  if (granularity == GranularityMerge::kNone) {
    merged.assign(scores.begin(), scores.end());
    weights.assign(member_weights.begin(), member_weights.end());
  } else {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = members.try_emplace(groups[i]);
      if (inserted) order.push_back(groups[i]);
      it->second.push_back(i);
    }
    for (const auto& g : order) {
      std::vector<std::vector<double>> values;
      double w = 0.0;
      for (std::size_t i : members[g]) {
        values.push_back(scores[i].values);
        w += member_weights[i];
      }
      ScoreVector sv{query_id, g, scores[members[g].front()].ids,
                     granularity == GranularityMerge::kMax ? max_of(values)
                                                           : mean_of(values)};
      merged.push_back(std::move(sv));
      weights.push_back(w / static_cast<double>(members[g].size()));
    }
  }
  if (retriever == RetrieverMerge::kMean) {
    std::fill(weights.begin(), weights.end(), 1.0);
  }
  return fuse(query_id, merged, weights, depth);
}

Run to_run(std::span<const FusedRun> fused, const std::string& tag) {
  Run run;
  run.tag = tag;
  for (const auto& f : fused) {
    auto& entries = run.queries[f.query_id];
    entries.reserve(f.ranked.size());
    for (const auto& e : f.ranked) entries.push_back({e.doc_id, e.score, e.rank});
  }
  return run;
}

}  // namespace mor
