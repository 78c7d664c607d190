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

#include "mor/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "io_util.h"
#include "mor/error.h"
#include "mor/signals.h"
#include "mor/trec.h"

namespace mor {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string join(std::span<const std::string> parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::size_t> top_rows(const ScoreVector& scores, std::size_t k) {
  return top_k_rows(scores.values, *scores.ids, k);
}

FusedRun single_run(const std::string& query_id, const ScoreVector& scores,
                    std::size_t depth) {
  const double weight = 1.0;
  return fuse(query_id, std::span<const ScoreVector>(&scores, 1),
              std::span<const double>(&weight, 1), depth);
}

Qrels require_qrels(const PipelineConfig& config, const char* why) {
  if (config.dataset.qrels.empty()) {
    throw ConfigError(std::string(why) + " needs 'dataset.qrels'");
  }
  return load_qrels(config.dataset.qrels);
}

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& body) {
  auto out = detail::open_output(path);
  body(out);
  if (!out) throw IoError("write failed: " + path.string());
}

std::string threshold_stem(double t) {
  std::string s = format_double(t);
  for (char& c : s) {
    if (c == '.') c = '_';
  }
  return "threshold-" + s;
}

}  // namespace

std::unique_ptr<Collection> load_collection(const PipelineConfig& config) {
  Corpus corpus = load_corpus(config.dataset.corpus);
  QuerySet queries = load_queries(config.dataset.queries);
  Qrels qrels;
  if (!config.dataset.qrels.empty()) qrels = load_qrels(config.dataset.qrels);
  GranularityMap granularity =
      load_granularity_map(config.dataset.propositions,
                           config.dataset.subqueries, corpus, queries);
  EmbeddingStore store;
  for (const auto& [space, path] : config.embeddings) {
    store.add(load_embeddings(path, space));
  }
  return std::make_unique<Collection>(std::move(corpus), std::move(queries),
                                      std::move(qrels), std::move(granularity),
                                      std::move(store));
}

std::optional<Qrels> load_dev_qrels(const PipelineConfig& config) {
  if (config.dataset.dev_qrels.empty()) return std::nullopt;
  return load_qrels(config.dataset.dev_qrels);
}

PoolOptions pool_options(const PipelineConfig& config) {
  PoolOptions o;
  o.seed = config.fusion.kmeans_seed;
  o.depth = config.fusion.signal_depth;
  o.threads = config.threads;
  return o;
}

PoolResults::PoolResults(const Pool& pool, std::vector<QueryResult> results)
    : pool_(&pool), results_(std::move(results)) {}

PoolResults PoolResults::compute(const Pool& pool,
                                 std::span<const Query> queries) {
  return PoolResults(pool, pool.run_all(queries));
}

std::vector<std::size_t> PoolResults::resolve(
    std::span<const std::size_t> members) const {
  if (!members.empty()) {
    for (std::size_t m : members) {
      if (m >= pool_->size()) throw ContractError("pool member out of range");
    }
    return {members.begin(), members.end()};
  }
  std::vector<std::size_t> all(pool_->size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

std::vector<WeightAllocation> PoolResults::allocations(
    const FusionMode& mode, const FusionConfig& fusion, const Qrels* dev_qrels,
    std::span<const std::size_t> members) const {
  const auto idx = resolve(members);
  std::vector<double> fixed_weights;
  if (mode.kind == FusionMode::Kind::kBaseline) {
    if (mode.argument == "perf_norm") {
      if (dev_qrels == nullptr) {
        throw ConfigError("baseline perf_norm needs 'dataset.dev_qrels'");
      }
      const auto all = perf_norm(dev_performance(*dev_qrels, fusion.oracle_metric));
      for (std::size_t m : idx) fixed_weights.push_back(all[m]);
    } else if (mode.argument == "cluster_var") {
      for (std::size_t m : idx) {
        fixed_weights.push_back(cluster_var(pool_->clustering(m)));
      }
    }
  }
  std::vector<WeightAllocation> out;
  out.reserve(results_.size());
  for (const auto& q : results_) {
    std::vector<SignalBundle> signals;
    for (std::size_t m : idx) signals.push_back(q.members[m].signals);
    switch (mode.kind) {
      case FusionMode::Kind::kPre:
        out.push_back(weight_pre(q.query_id, signals));
        break;
      case FusionMode::Kind::kPost:
        out.push_back(weight_post(q.query_id, signals, fusion.coefficients));
        break;
      case FusionMode::Kind::kMean:
        out.push_back(weight_equal(q.query_id, idx.size()));
        break;
      case FusionMode::Kind::kBaseline: {
        WeightAllocation a{q.query_id, "baseline:" + mode.argument, {}, {}};
        if (!fixed_weights.empty()) {
          a.weights = fixed_weights;
        } else {
          for (std::size_t m : idx) {
            a.weights.push_back(mode.argument == "score_var"
                                    ? q.members[m].score_var
                                    : q.members[m].rep_var);
          }
        }
        out.push_back(std::move(a));
        break;
      }
      default:
        throw ContractError("mode '" + mode.name + "' has no weight allocation");
    }
  }
  return out;
}

std::vector<FusedRun> PoolResults::member_runs(std::size_t member,
                                               std::size_t depth) const {
  if (member >= pool_->size()) throw ContractError("pool member out of range");
  std::vector<FusedRun> out;
  out.reserve(results_.size());
  for (const auto& q : results_) {
    out.push_back(single_run(q.query_id, q.members[member].scores, depth));
  }
  return out;
}

std::vector<FusedRun> PoolResults::fuse(const FusionMode& mode,
                                        const FusionConfig& fusion,
                                        const Qrels* qrels,
                                        const Qrels* dev_qrels,
                                        std::span<const std::size_t> members) const {
  const auto idx = resolve(members);
  std::vector<FusedRun> out;
  out.reserve(results_.size());
  auto member_scores = [&](const QueryResult& q) {
    std::vector<ScoreVector> s;
    for (std::size_t m : idx) s.push_back(q.members[m].scores);
    return s;
  };
  switch (mode.kind) {
    case FusionMode::Kind::kPre:
    case FusionMode::Kind::kPost:
    case FusionMode::Kind::kMean:
    case FusionMode::Kind::kBaseline: {
      const auto alloc = allocations(mode, fusion, dev_qrels, idx);
      for (std::size_t i = 0; i < results_.size(); ++i) {
        out.push_back(mor::fuse(results_[i].query_id, member_scores(results_[i]),
                                alloc[i].weights, fusion.depth));
      }
      break;
    }
    case FusionMode::Kind::kRrf:
      for (const auto& q : results_) {
        std::vector<std::vector<std::string>> lists;
        for (std::size_t m : idx) {
          const auto& s = q.members[m].scores;
          std::vector<std::string> list;
          for (auto row : top_rows(s, fusion.rrf_depth)) {
            list.push_back((*s.ids)[row]);
          }
          lists.push_back(std::move(list));
        }
        out.push_back(rrf(q.query_id, lists, fusion.rrf_k, fusion.depth));
      }
      break;
    case FusionMode::Kind::kRouteOracle:
      if (qrels == nullptr) {
        throw ConfigError("route-oracle needs relevance judgments");
      }
      for (const auto& q : results_) {
        std::vector<FusedRun> runs;
        for (std::size_t m : idx) {
          runs.push_back(single_run(q.query_id, q.members[m].scores, fusion.depth));
        }
        out.push_back(route_oracle(runs, qrels->find(q.query_id),
                                   fusion.oracle_metric));
      }
      break;
    case FusionMode::Kind::kAblation: {
      const auto pre = allocations(FusionMode::parse("mor-pre"), fusion, nullptr, idx);
      const auto post =
          allocations(FusionMode::parse("mor-post"), fusion, nullptr, idx);
      std::vector<std::string> groups;
      for (std::size_t m : idx) groups.push_back(pool_->spec(m).name);
      for (std::size_t i = 0; i < results_.size(); ++i) {
        out.push_back(merge_ablation(results_[i].query_id, groups,
                                     member_scores(results_[i]), pre[i].weights,
                                     post[i].weights, mode.granularity_merge,
                                     mode.retriever_merge, fusion.depth));
      }
      break;
    }
    case FusionMode::Kind::kSingle: {
      const auto ids = pool_->member_ids();
      auto it = std::find(ids.begin(), ids.end(), mode.argument);
      if (it == ids.end()) {
        throw ConfigError("mode '" + mode.name + "' names no pool member");
      }
      return member_runs(static_cast<std::size_t>(it - ids.begin()),
                         fusion.depth);
    }
  }
  return out;
}

PoolResults::ThresholdResult PoolResults::threshold(
    double t, const FusionConfig& fusion,
    std::span<const std::size_t> members) const {
  const auto idx = resolve(members);
  const auto alloc =
      allocations(FusionMode::parse(fusion.threshold_weights), fusion, nullptr, idx);
  ThresholdResult out;
  out.threshold = t;
  double retained = 0.0;
  for (std::size_t i = 0; i < results_.size(); ++i) {
    const auto kept = prereject(alloc[i], t);
    retained += kept.retained_fraction;
    std::vector<ScoreVector> scores;
    for (std::size_t m : idx) scores.push_back(results_[i].members[m].scores);
    out.runs.push_back(mor::fuse(results_[i].query_id, scores,
                                 kept.allocation.weights, fusion.depth));
  }
  out.retained_fraction =
      results_.empty() ? 1.0 : retained / static_cast<double>(results_.size());
  return out;
}

std::vector<double> PoolResults::dev_performance(const Qrels& dev_qrels,
                                                 const Metric& metric) const {
  std::vector<double> out(pool_->size(), 0.0);
  std::size_t judged = 0;
  for (const auto& q : results_) {
    const auto* grades = dev_qrels.find(q.query_id);
    if (grades == nullptr || dev_qrels.relevant_count(q.query_id) == 0) continue;
    ++judged;
    for (std::size_t m = 0; m < pool_->size(); ++m) {
      const auto& s = q.members[m].scores;
      std::vector<std::string> ranking;
      for (auto row : top_rows(s, metric.k)) ranking.push_back((*s.ids)[row]);
      out[m] += evaluate_metric(metric, ranking, grades);
    }
  }
  if (judged == 0) {
    throw ContractError("perf_norm: no development query has judgments");
  }
  for (double& v : out) v /= static_cast<double>(judged);
  return out;
}

void PoolResults::write_signals_tsv(std::ostream& out) const {
  out << "query_id\tretriever\tgranularity\tv_pre\ti_moran\tv_post\n";
  for (const auto& q : results_) {
    for (std::size_t m = 0; m < pool_->size(); ++m) {
      const auto& spec = pool_->spec(m);
      const auto& s = q.members[m].signals;
      out << q.query_id << '\t' << spec.name << '\t'
          << to_string(spec.granularity) << '\t' << format_double(s.v_pre)
          << '\t' << format_double(s.i_moran) << '\t'
          << format_double(s.v_post) << '\n';
    }
  }
}

void write_weights_tsv(std::ostream& out, const Pool& pool,
                       std::span<const WeightAllocation> allocations,
                       std::span<const std::size_t> members) {
  std::vector<std::size_t> idx(members.begin(), members.end());
  if (idx.empty()) {
    idx.resize(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  out << "query_id\tretriever\tgranularity\tweight\n";
  for (const auto& a : allocations) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& spec = pool.spec(idx[i]);
      out << a.query_id << '\t' << spec.name << '\t'
          << to_string(spec.granularity) << '\t' << format_double(a.weights[i])
          << '\n';
    }
  }
}

double mean_metric(std::span<const FusedRun> runs, const Qrels& qrels,
                   const Metric& metric) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& r : runs) {
    if (qrels.relevant_count(r.query_id) == 0) continue;
    total += evaluate_metric(metric, r.ranking(), qrels.find(r.query_id));
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

HumanSimulation simulate_humans(const Collection& collection,
                                std::span<const RetrieverSpec> base_pool,
                                const SimulationConfig& simulation,
                                const FusionConfig& fusion,
                                const PoolOptions& options,
                                const Metric& metric,
                                ClusteringCache* clusterings, Bm25Cache* bm25) {
  if (simulation.domains.empty()) {
    throw ConfigError("'simulation.domains' is empty");
  }
  if (simulation.reference_space.empty()) {
    throw ConfigError("'simulation.reference_space' is empty");
  }
  for (const auto& q : collection.queries().queries()) {
    if (!q.domain) {
      throw ContractError("query '" + q.query_id +
                          "' has no domain label for the expert simulation");
    }
  }
  std::vector<RetrieverSpec> specs;
  if (simulation.include_pool) {
    specs.assign(base_pool.begin(), base_pool.end());
  }
  const std::size_t base_count = specs.size();
  HumanSimulation sim;
  sim.domains = simulation.domains;
  for (const auto& d : simulation.domains) {
    RetrieverSpec e;
    e.name = "expert-" + d;
    e.kind = RetrieverKind::kOracleHuman;
    e.granularity = Granularity::kQD;
    e.embedding_space = simulation.reference_space;
    e.expert_domain = d;
    e.seed = simulation.seed;
    sim.experts.push_back(e.member_id());
    specs.push_back(std::move(e));
  }
  const Pool pool(collection, specs, options, clusterings, bm25);
  const auto& qs = collection.queries().queries();
  const PoolResults results = PoolResults::compute(pool, qs);

  std::vector<std::size_t> base(base_count);
  std::iota(base.begin(), base.end(), std::size_t{0});
  std::vector<std::size_t> experts(simulation.domains.size());
  std::iota(experts.begin(), experts.end(), base_count);

  const FusionMode post = FusionMode::parse("mor-post");
  const auto alloc = results.allocations(post, fusion);
  std::map<std::string, std::size_t> domain_index;
  for (std::size_t d = 0; d < sim.domains.size(); ++d) {
    domain_index[sim.domains[d]] = d;
  }
  sim.weights.assign(experts.size(), std::vector<double>(sim.domains.size(), 0.0));
  std::vector<std::size_t> per_domain(sim.domains.size(), 0);
  std::vector<int> query_domain(qs.size(), -1);
  for (std::size_t i = 0; i < qs.size(); ++i) {
    auto it = domain_index.find(*qs[i].domain);
    if (it == domain_index.end()) continue;
    const std::size_t d = it->second;
    query_domain[i] = static_cast<int>(d);
    ++per_domain[d];
    const auto& w = alloc[i].weights;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (total <= 0.0) continue;
    for (std::size_t e = 0; e < experts.size(); ++e) {
      sim.weights[e][d] += w[experts[e]] / total;
    }
  }
  for (auto& row : sim.weights) {
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (per_domain[d] > 0) row[d] /= static_cast<double>(per_domain[d]);
    }
  }

  sim.humans_runs =
      results.fuse(FusionMode::parse("mean"), fusion, nullptr, nullptr, experts);
  sim.mor_humans_runs = results.fuse(post, fusion);
  std::vector<std::vector<FusedRun>> systems;
  if (base_count > 0) {
    sim.systems.push_back("mor-post");
    systems.push_back(results.fuse(post, fusion, nullptr, nullptr, base));
  }
  sim.systems.push_back("humans");
  systems.push_back(sim.humans_runs);
  sim.systems.push_back("mor+humans");
  systems.push_back(sim.mor_humans_runs);

  for (const auto& runs : systems) {
    std::vector<double> row;
    for (std::size_t d = 0; d < sim.domains.size(); ++d) {
      std::vector<FusedRun> subset;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        if (query_domain[i] == static_cast<int>(d)) subset.push_back(runs[i]);
      }
      row.push_back(mean_metric(subset, collection.qrels(), metric));
    }
    sim.ndcg.push_back(std::move(row));
  }
  return sim;
}

void write_simulation_tables(std::ostream& weights_out, std::ostream& ndcg_out,
                             const HumanSimulation& sim) {
  weights_out << "expert";
  for (const auto& d : sim.domains) weights_out << '\t' << d;
  weights_out << '\n';
  for (std::size_t e = 0; e < sim.experts.size(); ++e) {
    weights_out << sim.experts[e];
    for (double w : sim.weights[e]) weights_out << '\t' << fixed(w, 3);
    weights_out << '\n';
  }
  ndcg_out << "system";
  for (const auto& d : sim.domains) ndcg_out << '\t' << d;
  ndcg_out << "\tavg\n";
  for (std::size_t s = 0; s < sim.systems.size(); ++s) {
    ndcg_out << sim.systems[s];
    double total = 0.0;
    for (double v : sim.ndcg[s]) {
      ndcg_out << '\t' << fixed(v);
      total += v;
    }
    const double avg =
        sim.ndcg[s].empty() ? 0.0 : total / static_cast<double>(sim.ndcg[s].size());
    ndcg_out << '\t' << fixed(avg) << '\n';
  }
}

std::vector<SubsetResult> best_of_subsets(const PoolResults& results,
                                          const FusionMode& mode,
                                          const FusionConfig& fusion,
                                          const Qrels& qrels,
                                          std::span<const std::size_t> sizes,
                                          const Metric& metric) {
  const Pool& pool = results.pool();
  std::vector<std::string> names;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const auto& n = pool.spec(m).name;
    if (std::find(names.begin(), names.end(), n) == names.end()) {
      names.push_back(n);
    }
  }
  std::vector<SubsetResult> out;
  for (std::size_t x : sizes) {
    if (x == 0 || x > names.size()) continue;
    SubsetResult best{x, {}, -1.0};
    std::vector<bool> pick(names.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(x), true);
    do {
      std::vector<std::string> chosen;
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (pick[i]) chosen.push_back(names[i]);
      }
      std::vector<std::size_t> members;
      for (std::size_t m = 0; m < pool.size(); ++m) {
        if (std::find(chosen.begin(), chosen.end(), pool.spec(m).name) !=
            chosen.end()) {
          members.push_back(m);
        }
      }
      const auto runs = results.fuse(mode, fusion, &qrels, nullptr, members);
      const double v = mean_metric(runs, qrels, metric);
      if (v > best.value) best = {x, chosen, v};
    } while (std::prev_permutation(pick.begin(), pick.end()));
    out.push_back(std::move(best));
  }
  return out;
}

int cmd_index(const PipelineConfig& config, std::ostream& log) {
  validate_config(config);
  const auto collection = load_collection(config);
  const auto cache = effective_cache_dir(config);
  ClusteringCache clusterings(cache);
  Bm25Cache bm25(cache);
  const Pool pool(*collection, config.pool, pool_options(config), &clusterings,
                  &bm25);
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const auto& c = pool.clustering(m);
    log << "member " << pool.spec(m).member_id() << ": K=" << c.k << " over "
        << c.assignment.size() << " items\n";
  }
  log << "bm25 indexes: " << bm25.builds() << " built, " << bm25.hits()
      << " cache hits\n";
  log << "clusterings: " << clusterings.builds() << " built, "
      << clusterings.hits() << " cache hits\n";
  log << (bm25.builds() + clusterings.builds() == 0 ? "cache hit" : "cache updated")
      << ": " << cache.string() << '\n';
  return 0;
}

int cmd_fuse(const PipelineConfig& config, std::ostream& log) {
  validate_config(config);
  std::vector<FusionMode> modes;
  for (const auto& m : config.fusion.modes) modes.push_back(FusionMode::parse(m));
  const bool has_qrels = !config.dataset.qrels.empty();
  for (const auto& m : modes) {
    if (m.kind == FusionMode::Kind::kRouteOracle && !has_qrels) {
      throw ConfigError("mode route-oracle needs 'dataset.qrels'");
    }
    if (m.kind == FusionMode::Kind::kBaseline && m.argument == "perf_norm" &&
        config.dataset.dev_qrels.empty()) {
      throw ConfigError("mode baseline:perf_norm needs 'dataset.dev_qrels'");
    }
  }
  const auto collection = load_collection(config);
  const auto dev = load_dev_qrels(config);
  const auto cache = effective_cache_dir(config);
  ClusteringCache clusterings(cache);
  Bm25Cache bm25(cache);
  const Pool pool(*collection, config.pool, pool_options(config), &clusterings,
                  &bm25);
  const auto& queries = collection->queries().queries();
  const PoolResults results = PoolResults::compute(pool, queries);
  const auto& out_dir = config.output_dir;
  const Qrels* qrels = has_qrels ? &collection->qrels() : nullptr;

  write_file(out_dir / "signals.tsv",
             [&](std::ostream& o) { results.write_signals_tsv(o); });
  for (const auto& mode : modes) {
    const auto runs = results.fuse(mode, config.fusion, qrels,
                                   dev ? &*dev : nullptr);
    const auto tag = mode.tag(config.fusion.coefficients);
    const auto path = out_dir / "runs" / (mode.file_stem() + ".run");
    write_run(path, to_run(runs, tag));
    log << "wrote " << path.string() << " (" << tag << ")\n";
    switch (mode.kind) {
      case FusionMode::Kind::kPre:
      case FusionMode::Kind::kPost:
      case FusionMode::Kind::kMean:
      case FusionMode::Kind::kBaseline: {
        const auto alloc = results.allocations(mode, config.fusion,
                                               dev ? &*dev : nullptr);
        write_file(out_dir / "weights" / (mode.file_stem() + ".tsv"),
                   [&](std::ostream& o) { write_weights_tsv(o, pool, alloc); });
        break;
      }
      default:
        break;
    }
  }
  if (!config.fusion.thresholds.empty()) {
    const Metric ndcg20{Metric::Kind::kNdcg, 20};
    std::vector<std::string> rows;
    for (double t : config.fusion.thresholds) {
      const auto r = results.threshold(t, config.fusion);
      const auto stem = threshold_stem(t);
      write_run(out_dir / "runs" / (stem + ".run"),
                to_run(r.runs, config.fusion.threshold_weights + "-t" +
                                   format_double(t)));
      std::string row = format_double(t) + '\t' + fixed(r.retained_fraction);
      if (qrels) row += '\t' + fixed(mean_metric(r.runs, *qrels, ndcg20));
      rows.push_back(std::move(row));
    }
    write_file(out_dir / "thresholds.tsv", [&](std::ostream& o) {
      o << "threshold\tretained_fraction" << (qrels ? "\tndcg@20" : "") << '\n';
      for (const auto& r : rows) o << r << '\n';
    });
    log << "wrote " << rows.size() << " threshold runs\n";
  }
  return 0;
}

int cmd_eval(const PipelineConfig& config, std::ostream& log) {
  const Qrels qrels = require_qrels(config, "eval");
  std::vector<std::filesystem::path> paths;
  const auto runs_dir = config.output_dir / "runs";
  if (std::filesystem::is_directory(runs_dir)) {
    for (const auto& e : std::filesystem::directory_iterator(runs_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".run") {
        paths.push_back(e.path());
      }
    }
  }
  std::sort(paths.begin(), paths.end());
  paths.insert(paths.end(), config.eval.runs.begin(), config.eval.runs.end());
  if (paths.empty()) {
    throw ConfigError("no run files under " + runs_dir.string() +
                      " and none listed in 'eval.runs'");
  }
  std::optional<Corpus> corpus;
  if (!config.dataset.corpus.empty() &&
      std::filesystem::exists(config.dataset.corpus)) {
    corpus = load_corpus(config.dataset.corpus);
    if (!corpus->has_chunks()) corpus.reset();
  }
  std::vector<EvalReport> reports;
  std::string pool;
  for (const auto& s : config.pool) pool += (pool.empty() ? "" : ",") + s.member_id();
  for (const auto& path : paths) {
    const Run run = read_run(path);
    EvalReport report = evaluate_run(run, qrels, config.eval.metrics,
                                     corpus ? &*corpus : nullptr);
    if (report.run_tag.empty()) report.run_tag = path.stem().string();
    report.pool_description = pool;
    report.config_hash = config.hash;
    write_file(config.output_dir / "eval" / (path.stem().string() + ".tsv"),
               [&](std::ostream& o) { write_report_tsv(o, report); });
    if (!report.empty_queries.empty() || !report.unknown_queries.empty()) {
      log << path.filename().string() << ": " << report.empty_queries.size()
          << " judged queries without results, " << report.unknown_queries.size()
          << " unjudged queries skipped\n";
    }
    reports.push_back(std::move(report));
  }
  const std::string table = format_comparison_table(reports);
  write_file(config.output_dir / "eval" / "summary.txt", [&](std::ostream& o) {
    o << "# config " << config.hash << '\n' << table;
  });
  log << table;
  return 0;
}

int cmd_simulate_humans(const PipelineConfig& config, std::ostream& log) {
  validate_config(config);
  require_qrels(config, "simulate-humans");
  const auto collection = load_collection(config);
  const auto cache = effective_cache_dir(config);
  ClusteringCache clusterings(cache);
  Bm25Cache bm25(cache);
  const auto sim = simulate_humans(*collection, config.pool, config.simulation,
                                   config.fusion, pool_options(config),
                                   Metric{Metric::Kind::kNdcg, 20},
                                   &clusterings, &bm25);
  const auto dir = config.output_dir / "simulation";
  {
    auto w = detail::open_output(dir / "weights.tsv");
    auto n = detail::open_output(dir / "ndcg.tsv");
    write_simulation_tables(w, n, sim);
  }
  write_run(dir / "humans.run", to_run(sim.humans_runs, "humans"));
  write_run(dir / "mor+humans.run",
            to_run(sim.mor_humans_runs,
                   "mor+humans" + config.fusion.coefficients.label()));
  write_simulation_tables(log, log, sim);
  return 0;
}

int cmd_sweep(const PipelineConfig& config, std::ostream& log) {
  validate_config(config);
  require_qrels(config, "sweep");
  const auto collection = load_collection(config);
  const auto cache = effective_cache_dir(config);
  ClusteringCache clusterings(cache);
  Bm25Cache bm25(cache);
  const Pool pool(*collection, config.pool, pool_options(config), &clusterings,
                  &bm25);
  const PoolResults results =
      PoolResults::compute(pool, collection->queries().queries());
  const Metric ndcg20{Metric::Kind::kNdcg, 20};
  const auto& qrels = collection->qrels();
  const auto dir = config.output_dir / "sweep";

  write_file(dir / "thresholds.tsv", [&](std::ostream& o) {
    o << "threshold\tretained_fraction\tndcg@20\n";
    for (double t : config.sweep.thresholds) {
      const auto r = results.threshold(t, config.fusion);
      const double v = mean_metric(r.runs, qrels, ndcg20);
      o << format_double(t) << '\t' << fixed(r.retained_fraction) << '\t'
        << fixed(v) << '\n';
      log << "t=" << format_double(t) << " retained " << fixed(r.retained_fraction)
          << " ndcg@20 " << fixed(v) << '\n';
    }
  });
  const auto best = best_of_subsets(results, FusionMode::parse(config.sweep.mode),
                                    config.fusion, qrels,
                                    config.sweep.subset_sizes, ndcg20);
  write_file(dir / "best_of.tsv", [&](std::ostream& o) {
    o << "size\tretrievers\tndcg@20\n";
    for (const auto& b : best) {
      o << b.size << '\t' << join(b.retrievers, ",") << '\t' << fixed(b.value)
        << '\n';
      log << "best of " << b.size << ": " << join(b.retrievers, ", ") << " "
          << fixed(b.value) << '\n';
    }
  });
  return 0;
}

}  // namespace mor
