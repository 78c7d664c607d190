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

#include "mor/config.h"

#include <cstdio>
#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "io_util.h"
#include "mor/error.h"
#include "mor/random.h"

namespace mor {

namespace {

using nlohmann::json;

const std::set<std::string> kBaselines = {"perf_norm", "cluster_var",
                                          "score_var", "rep_var"};

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

bool is_index(const std::string& s) {
  return !s.empty() &&
         s.find_first_not_of("0123456789") == std::string::npos;
}

void apply_override(json& root, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + item + "' is not key=value");
  }
  const std::string value_text = item.substr(eq + 1);
  json value = json::parse(value_text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = value_text;
  json* node = &root;
  const auto keys = split(std::string_view(item).substr(0, eq), '.');
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& key = keys[i];
    if (key.empty()) throw ConfigError("override '" + item + "' has an empty key");
    json* child;
    if (node->is_array() && is_index(key)) {
      const auto idx = std::stoul(key);
      if (idx >= node->size()) {
        throw ConfigError("override '" + item + "': index out of range");
      }
      child = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) {
        throw ConfigError("override '" + item + "': '" + key +
                          "' is below a non-object value");
      }
      child = &(*node)[key];
    }
    node = child;
  }
  *node = std::move(value);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ConfigError("unknown key '" + key + "' in '" + where + "'");
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("'" + where + "." + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::filesystem::path path_or(const json& obj, const char* key,
                              const std::filesystem::path& base,
                              const std::string& where) {
  return resolve(base, get_or<std::string>(obj, key, "", where));
}

std::vector<RetrieverSpec> parse_pool(const json& pool) {
  if (!pool.is_array()) throw ConfigError("'pool' must be a list");
  std::vector<RetrieverSpec> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& e = pool[i];
    const std::string where = "pool." + std::to_string(i);
    check_keys(e, where,
               {"name", "kind", "granularity", "granularities",
                "embedding_space", "k1", "b", "domain", "seed"});
    RetrieverSpec base;
    base.name = get_or<std::string>(e, "name", "", where);
    if (base.name.empty()) throw ConfigError("'" + where + "' has no name");
    base.kind = parse_retriever_kind(get_or<std::string>(e, "kind", "", where));
    base.embedding_space = get_or<std::string>(e, "embedding_space", "", where);
    base.bm25.k1 = get_or<double>(e, "k1", 1.2, where);
    base.bm25.b = get_or<double>(e, "b", 0.75, where);
    base.expert_domain = get_or<std::string>(e, "domain", "", where);
    base.seed = get_or<std::uint64_t>(e, "seed", 0, where);
    std::vector<std::string> grans;
    if (e.contains("granularities")) {
      grans = get_or<std::vector<std::string>>(e, "granularities", {}, where);
    } else {
      grans.push_back(get_or<std::string>(e, "granularity", "q-d", where));
    }
    if (grans.empty()) throw ConfigError("'" + where + "' lists no granularity");
    for (const auto& g : grans) {
      RetrieverSpec spec = base;
      spec.granularity = parse_granularity(g);
      out.push_back(std::move(spec));
    }
  }
  return out;
}

void parse_embeddings(const json& emb, const std::filesystem::path& base,
                      std::map<std::string, std::filesystem::path>& out) {
  if (!emb.is_object()) throw ConfigError("'embeddings' must be an object");
  for (const auto& [key, value] : emb.items()) {
    if (value.is_string()) {
      out[key] = resolve(base, value.get<std::string>());
    } else if (value.is_object()) {
      for (const auto& [kind, path] : value.items()) {
        if (!path.is_string()) {
          throw ConfigError("'embeddings." + key + "." + kind +
                            "' must be a path");
        }
        out[key + "/" + kind] = resolve(base, path.get<std::string>());
      }
    } else {
      throw ConfigError("'embeddings." + key + "' must be a path or object");
    }
  }
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

FusionMode FusionMode::parse(std::string_view name) {
  FusionMode m;
  m.name = std::string(name);
  if (name == "mor-pre") {
    m.kind = Kind::kPre;
  } else if (name == "mor-post") {
    m.kind = Kind::kPost;
  } else if (name == "mean") {
    m.kind = Kind::kMean;
  } else if (name == "rrf") {
    m.kind = Kind::kRrf;
  } else if (name == "route-oracle") {
    m.kind = Kind::kRouteOracle;
  } else if (name.starts_with("baseline:")) {
    m.kind = Kind::kBaseline;
    m.argument = std::string(name.substr(9));
    if (!kBaselines.count(m.argument)) {
      throw ConfigError("unknown baseline '" + m.argument + "'");
    }
  } else if (name.starts_with("ablation:")) {
    m.kind = Kind::kAblation;
    const auto parts = split(name.substr(9), '+');
    if (parts.size() != 2) {
      throw ConfigError("ablation mode '" + m.name +
                        "' must read ablation:<granularity>+<retriever>");
    }
    m.granularity_merge = parse_granularity_merge(parts[0]);
    m.retriever_merge = parse_retriever_merge(parts[1]);
  } else if (name.starts_with("single:")) {
    m.kind = Kind::kSingle;
    m.argument = std::string(name.substr(7));
    if (m.argument.empty()) throw ConfigError("single: needs a member id");
  } else {
    throw ConfigError("unknown fusion mode '" + m.name + "'");
  }
  return m;
}

std::string FusionMode::tag(const Coefficients& coefficients) const {
  const bool post = kind == Kind::kPost ||
                    (kind == Kind::kAblation &&
                     retriever_merge == RetrieverMerge::kPost);
  return post ? name + coefficients.label() : name;
}

std::string FusionMode::file_stem() const {
  std::string out = name;
  for (char& c : out) {
    if (c == ':' || c == '/') c = '_';
  }
  return out;
}

PipelineConfig parse_config(std::string_view json_text,
                            const std::filesystem::path& base_dir,
                            std::span<const std::string> overrides) {
  json root = json::parse(json_text, nullptr, /*allow_exceptions=*/false,
                          /*ignore_comments=*/true);
  if (root.is_discarded()) throw ConfigError("configuration is not valid JSON");
  if (!root.is_object()) throw ConfigError("configuration must be an object");
  for (const auto& o : overrides) apply_override(root, o);

  check_keys(root, "config",
             {"dataset", "embeddings", "pool", "fusion", "eval", "simulation",
              "sweep", "output", "cache_dir", "threads"});
  PipelineConfig c;
  c.base_dir = base_dir;
  c.hash = hex(stable_hash(root.dump()));

  const json empty = json::object();
  const json& ds = root.contains("dataset") ? root["dataset"] : empty;
  check_keys(ds, "dataset",
             {"corpus", "queries", "qrels", "dev_qrels", "propositions",
              "subqueries"});
  c.dataset.corpus = path_or(ds, "corpus", base_dir, "dataset");
  c.dataset.queries = path_or(ds, "queries", base_dir, "dataset");
  c.dataset.qrels = path_or(ds, "qrels", base_dir, "dataset");
  c.dataset.dev_qrels = path_or(ds, "dev_qrels", base_dir, "dataset");
  c.dataset.propositions = path_or(ds, "propositions", base_dir, "dataset");
  c.dataset.subqueries = path_or(ds, "subqueries", base_dir, "dataset");

  if (root.contains("embeddings")) {
    parse_embeddings(root["embeddings"], base_dir, c.embeddings);
  }
  if (root.contains("pool")) c.pool = parse_pool(root["pool"]);

  const json& fu = root.contains("fusion") ? root["fusion"] : empty;
  check_keys(fu, "fusion",
             {"modes", "coefficients", "thresholds", "threshold_weights",
              "depth", "rrf_k", "rrf_depth", "signal_depth", "kmeans_seed",
              "oracle_metric"});
  c.fusion.modes = get_or(fu, "modes", c.fusion.modes, "fusion");
  if (fu.contains("coefficients")) {
    const auto abc = get_or<std::vector<double>>(fu, "coefficients", {}, "fusion");
    if (abc.size() != 3) {
      throw ConfigError("'fusion.coefficients' must list a, b and c");
    }
    c.fusion.coefficients = {abc[0], abc[1], abc[2]};
  }
  c.fusion.thresholds = get_or(fu, "thresholds", c.fusion.thresholds, "fusion");
  c.fusion.threshold_weights =
      get_or(fu, "threshold_weights", c.fusion.threshold_weights, "fusion");
  c.fusion.depth = get_or(fu, "depth", c.fusion.depth, "fusion");
  c.fusion.rrf_k = get_or(fu, "rrf_k", c.fusion.rrf_k, "fusion");
  c.fusion.rrf_depth = get_or(fu, "rrf_depth", c.fusion.rrf_depth, "fusion");
  c.fusion.signal_depth =
      get_or(fu, "signal_depth", c.fusion.signal_depth, "fusion");
  c.fusion.kmeans_seed = get_or(fu, "kmeans_seed", c.fusion.kmeans_seed, "fusion");
  c.fusion.oracle_metric = Metric::parse(
      get_or<std::string>(fu, "oracle_metric", "ndcg@20", "fusion"));

  const json& ev = root.contains("eval") ? root["eval"] : empty;
  check_keys(ev, "eval", {"metrics", "runs"});
  if (ev.contains("metrics")) {
    c.eval.metrics.clear();
    for (const auto& m : get_or<std::vector<std::string>>(ev, "metrics", {}, "eval")) {
      c.eval.metrics.push_back(Metric::parse(m));
    }
  }
  for (const auto& r : get_or<std::vector<std::string>>(ev, "runs", {}, "eval")) {
    c.eval.runs.push_back(resolve(base_dir, r));
  }

  const json& sim = root.contains("simulation") ? root["simulation"] : empty;
  check_keys(sim, "simulation",
             {"domains", "reference_space", "seed", "include_pool"});
  c.simulation.domains = get_or(sim, "domains", c.simulation.domains, "simulation");
  c.simulation.reference_space =
      get_or(sim, "reference_space", c.simulation.reference_space, "simulation");
  c.simulation.seed = get_or(sim, "seed", c.simulation.seed, "simulation");
  c.simulation.include_pool =
      get_or(sim, "include_pool", c.simulation.include_pool, "simulation");

  const json& sw = root.contains("sweep") ? root["sweep"] : empty;
  check_keys(sw, "sweep", {"subset_sizes", "mode", "thresholds"});
  c.sweep.subset_sizes = get_or(sw, "subset_sizes", c.sweep.subset_sizes, "sweep");
  c.sweep.mode = get_or(sw, "mode", c.sweep.mode, "sweep");
  c.sweep.thresholds = get_or(sw, "thresholds", c.sweep.thresholds, "sweep");

  c.output_dir = resolve(base_dir, get_or<std::string>(root, "output", "out", "config"));
  c.cache_dir = path_or(root, "cache_dir", base_dir, "config");
  c.threads = get_or<std::size_t>(root, "threads", 0, "config");

  c.fusion.coefficients.validate();
  for (const auto& m : c.fusion.modes) FusionMode::parse(m);
  FusionMode::parse(c.sweep.mode);
  if (c.fusion.threshold_weights != "mor-pre" &&
      c.fusion.threshold_weights != "mor-post") {
    throw ConfigError("'fusion.threshold_weights' must be mor-pre or mor-post");
  }
  for (double t : c.fusion.thresholds) {
    if (!(t >= 0.0 && t <= 100.0)) {
      throw ConfigError("thresholds must lie in [0, 100]");
    }
  }
  if (c.fusion.depth == 0 || c.fusion.signal_depth == 0 ||
      c.fusion.rrf_depth == 0) {
    throw ConfigError("fusion depths must be positive");
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path,
                           std::span<const std::string> overrides) {
  std::string text;
  try {
    text = detail::read_all(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read configuration " + path.string());
  }
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(text, base, overrides);
}

std::vector<std::string> required_spaces(const RetrieverSpec& spec,
                                         bool has_subqueries) {
  std::vector<std::string> out;
  const std::string& e = spec.embedding_space;
  switch (spec.kind) {
    case RetrieverKind::kSparseBm25:
      break;
    case RetrieverKind::kDense:
      out.push_back(e + (uses_propositions(spec.granularity) ? "/prop" : "/doc"));
      out.push_back(e + "/query");
      if (uses_subqueries(spec.granularity) && has_subqueries) {
        out.push_back(e + "/subq");
      }
      break;
    case RetrieverKind::kOracleHuman:
      out.push_back(e + "/doc");
      out.push_back(e + "/query");
      break;
  }
  return out;
}

void validate_config(const PipelineConfig& config) {
  auto need = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string("'dataset.") + what + "' is required");
    if (!std::filesystem::exists(p)) {
      throw ConfigError(std::string("dataset.") + what + ": " + p.string() +
                        " does not exist");
    }
  };
  auto optional = [](const std::filesystem::path& p, const char* what) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw ConfigError(std::string("dataset.") + what + ": " + p.string() +
                        " does not exist");
    }
  };
  need(config.dataset.corpus, "corpus");
  need(config.dataset.queries, "queries");
  optional(config.dataset.qrels, "qrels");
  optional(config.dataset.dev_qrels, "dev_qrels");
  optional(config.dataset.propositions, "propositions");
  optional(config.dataset.subqueries, "subqueries");
  for (const auto& [space, path] : config.embeddings) {
    if (!std::filesystem::exists(path)) {
      throw ConfigError("embedding space '" + space + "': " + path.string() +
                        " does not exist");
    }
  }
  const bool has_subqueries = !config.dataset.subqueries.empty();
  std::set<std::string> members;
  for (const auto& spec : config.pool) {
    if (!members.insert(spec.member_id()).second) {
      throw ConfigError("pool lists '" + spec.member_id() + "' twice");
    }
    if (spec.kind != RetrieverKind::kSparseBm25 && spec.embedding_space.empty()) {
      throw ConfigError("retriever '" + spec.name + "' has no embedding_space");
    }
    if (spec.kind == RetrieverKind::kOracleHuman &&
        spec.granularity != Granularity::kQD) {
      throw ConfigError("oracle expert '" + spec.name + "' supports only q-d");
    }
    for (const auto& space : required_spaces(spec, has_subqueries)) {
      if (!config.embeddings.count(space)) {
        throw ConfigError("retriever '" + spec.member_id() +
                          "' needs undeclared embedding space '" + space + "'");
      }
    }
  }
}

std::filesystem::path effective_cache_dir(const PipelineConfig& config) {
  if (const char* env = std::getenv("MOR_CACHE_DIR"); env && *env) return env;
  if (!config.cache_dir.empty()) return config.cache_dir;
  return config.output_dir / "cache";
}

}  // namespace mor
