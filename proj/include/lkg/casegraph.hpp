#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "annotate.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "random.hpp"

namespace lkg {

// ---------------------------------------------------------------------------
// Feature specification

enum class FeatureSource { kMetadataOrdinal, kMetadataNumeric, kLawpointCount };

inline std::string_view to_string(FeatureSource s) {
  switch (s) {
  case FeatureSource::kMetadataOrdinal: return "metadata-ordinal";
  case FeatureSource::kMetadataNumeric: return "metadata-numeric";
  case FeatureSource::kLawpointCount: return "lawpoint-count";
  }
  return "metadata-numeric";
}

inline FeatureSource parse_feature_source(std::string_view s) {
  if (s == "metadata-ordinal") return FeatureSource::kMetadataOrdinal;
  if (s == "metadata-numeric") return FeatureSource::kMetadataNumeric;
  if (s == "lawpoint-count") return FeatureSource::kLawpointCount;
  throw DataError("unknown feature source '" + std::string(s) + "'");
}

struct FeatureDef {
  std::string name;
  FeatureSource source = FeatureSource::kMetadataNumeric;
  std::string key;

  bool operator==(const FeatureDef&) const = default;
};

// Ordinal keys: "court", "doc_type", or any metadata key.
// Numeric keys: "year" and "month" (from the date), "count:<metadata key>" (number of
// `;`-separated items), "sentences", "tokens", "citations", or a metadata key whose
// value parses as a number.
struct FeatureSpec {
  std::vector<FeatureDef> features;

  std::size_t size() const { return features.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : features) out.push_back(f.name);
    return out;
  }

  void validate(const LawpointDictionary& dict) const {
    std::set<std::string> seen;
    const auto labels = dict.concept_labels();
    for (const auto& f : features) {
      if (f.name.empty()) throw DataError("feature spec has an unnamed feature");
      if (!seen.insert(f.name).second) throw DataError("duplicate feature name '" + f.name + "'");
      if (f.source == FeatureSource::kLawpointCount &&
          std::find(labels.begin(), labels.end(), f.key) == labels.end()) {
        throw DataError("feature '" + f.name + "' counts unknown lawpoint concept '" + f.key + "'");
      }
    }
  }

  nlohmann::ordered_json to_json() const {
    auto j = nlohmann::ordered_json::array();
    for (const auto& f : features) {
      j.push_back({{"name", f.name}, {"source", std::string(to_string(f.source))}, {"key", f.key}});
    }
    return j;
  }

  static FeatureSpec from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DataError("feature spec must be a JSON array");
    FeatureSpec spec;
    try {
      for (const auto& f : j) {
        spec.features.push_back({f.at("name").get<std::string>(),
                                 parse_feature_source(f.at("source").get<std::string>()),
                                 f.at("key").get<std::string>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed feature spec: ") + e.what());
    }
    return spec;
  }

  static FeatureSpec load(const std::string& path) {
    return from_json(detail::read_json_file(path, "feature spec"));
  }

  bool operator==(const FeatureSpec&) const = default;
};

/// The 13 metadata-derived base features.
inline FeatureSpec base_feature_spec() {
  using S = FeatureSource;
  return FeatureSpec{{
      {"court", S::kMetadataOrdinal, "court"},
      {"doc_type", S::kMetadataOrdinal, "doc_type"},
      {"jurisdiction", S::kMetadataOrdinal, "jurisdiction"},
      {"year", S::kMetadataNumeric, "year"},
      {"month", S::kMetadataNumeric, "month"},
      {"judge_count", S::kMetadataNumeric, "count:judges"},
      {"plaintiff_count", S::kMetadataNumeric, "count:plaintiffs"},
      {"defendant_count", S::kMetadataNumeric, "count:defendants"},
      {"appellant_count", S::kMetadataNumeric, "count:appellants"},
      {"cited_section_count", S::kMetadataNumeric, "count:sections"},
      {"cited_act_count", S::kMetadataNumeric, "count:acts"},
      {"sentence_count", S::kMetadataNumeric, "sentences"},
      {"token_count", S::kMetadataNumeric, "tokens"},
  }};
}

/// Base features plus one lawpoint-count column per dictionary concept.
inline FeatureSpec lawpoint_feature_spec(const LawpointDictionary& dict = default_lawpoints()) {
  auto spec = base_feature_spec();
  for (const auto& label : dict.concept_labels()) {
    std::string name = "lawpoint:" + label;
    spec.features.push_back({std::move(name), FeatureSource::kLawpointCount, label});
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Encoding

using OrdinalMaps = std::map<std::string, std::map<std::string, int>>; // feature -> label -> code

inline std::optional<std::string> ordinal_attribute(const Document& doc, const std::string& key) {
  if (key == "court") return doc.court;
  if (key == "doc_type") return std::string(to_string(doc.doc_type));
  const auto it = doc.metadata.find(key);
  if (it == doc.metadata.end()) return std::nullopt;
  return it->second;
}

inline double numeric_attribute(const Document& doc, const std::string& key) {
  if (key == "year" || key == "month") {
    const auto date = parse_date(doc.date);
    if (!date) return 0.0;
    return key == "year" ? date->year : date->month;
  }
  if (key.starts_with("count:")) {
    const auto it = doc.metadata.find(key.substr(6));
    return it == doc.metadata.end() ? 0.0 : static_cast<double>(text::list_items(it->second).size());
  }
  if (key == "sentences") return static_cast<double>(count_sentences(doc.body));
  if (key == "tokens") return static_cast<double>(count_words(doc.body));
  if (key == "citations") return static_cast<double>(doc.citations.size());
  const auto it = doc.metadata.find(key);
  if (it == doc.metadata.end()) return 0.0;
  const auto value = text::trim(it->second);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw DataError("document '" + doc.id + "': metadata key '" + key + "' is not numeric ('" +
                    it->second + "')");
  }
  return out;
}

/// Codes 1..n over the sorted distinct canonical values seen in `corpus`; 0 is
/// reserved for unknown or absent values.
inline OrdinalMaps build_ordinal_maps(const Corpus& corpus, const FeatureSpec& spec,
                                      const AliasTable& aliases) {
  OrdinalMaps maps;
  for (const auto& f : spec.features) {
    if (f.source != FeatureSource::kMetadataOrdinal) continue;
    std::set<std::string> labels;
    for (const auto& doc : corpus) {
      if (const auto v = ordinal_attribute(doc, f.key); v && !text::trim(*v).empty()) {
        labels.insert(aliases.canonicalize(*v));
      }
    }
    auto& m = maps[f.name];
    int code = 1;
    for (const auto& l : labels) m[l] = code++;
  }
  return maps;
}

inline std::vector<double> encode_features(const Document& doc, const std::vector<Mention>& mentions,
                                           const FeatureSpec& spec, const AliasTable& aliases,
                                           const OrdinalMaps& ordinal_maps) {
  std::vector<double> out;
  out.reserve(spec.size());
  for (const auto& f : spec.features) {
    switch (f.source) {
    case FeatureSource::kMetadataOrdinal: {
      const auto map = ordinal_maps.find(f.name);
      if (map == ordinal_maps.end()) {
        throw UsageError("encode_features: no ordinal map for feature '" + f.name + "'");
      }
      const auto v = ordinal_attribute(doc, f.key);
      int code = 0;
      if (v) {
        const auto it = map->second.find(aliases.canonicalize(*v));
        if (it != map->second.end()) code = it->second;
      }
      out.push_back(code);
      break;
    }
    case FeatureSource::kMetadataNumeric:
      out.push_back(numeric_attribute(doc, f.key));
      break;
    case FeatureSource::kLawpointCount:
      out.push_back(static_cast<double>(std::count_if(
          mentions.begin(), mentions.end(), [&](const Mention& m) { return m.concept_label == f.key; })));
      break;
    }
  }
  return out;
}

/// Per-column z-scores over the rows (population deviation); constant columns become 0.
inline Matrix normalize_features(const Matrix& raw) {
  Matrix out(raw.rows, raw.cols);
  if (raw.rows == 0) return out;
  const double n = static_cast<double>(raw.rows);
  for (std::size_t c = 0; c < raw.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < raw.rows; ++r) mean += raw(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < raw.rows; ++r) var += (raw(r, c) - mean) * (raw(r, c) - mean);
    const double sd = std::sqrt(var / n);
    for (std::size_t r = 0; r < raw.rows; ++r) out(r, c) = sd > 1e-12 ? (raw(r, c) - mean) / sd : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;

  auto operator<=>(const Edge&) const = default;
};

using EdgeList = std::vector<Edge>;

namespace relation {
inline constexpr std::string_view kCites = "cites";
inline constexpr std::string_view kSimilarTo = "similar_to";
} // namespace relation

struct CaseGraph {
  std::vector<std::string> nodes; // sorted document ids
  FeatureSpec spec;
  Matrix features;                // raw values, nodes x spec.size()
  std::map<std::string, EdgeList> edges;
  std::vector<std::map<std::string, std::size_t>> lawpoints; // concept counts per node
  OrdinalMaps ordinal_maps;

  std::size_t size() const { return nodes.size(); }

  std::optional<std::size_t> index_of(std::string_view id) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - nodes.begin());
  }

  const EdgeList& relation_edges(const std::string& name) const {
    const auto it = edges.find(name);
    if (it == edges.end()) throw DataError("case graph has no relation '" + name + "'");
    return it->second;
  }
};

/// Case and judgment documents become nodes (sorted by id). `cites` edges follow
/// citations between nodes; `similar_to` pairs are stored once as (lower, higher).
inline CaseGraph build_case_graph(const Corpus& corpus, const MentionIndex& mentions,
                                  const FeatureSpec& spec, const AliasTable& aliases) {
  CaseGraph g;
  g.spec = spec;
  std::vector<const Document*> docs;
  for (const auto& doc : corpus) {
    if (doc.doc_type != DocType::kLegislation) docs.push_back(&doc);
  }
  std::sort(docs.begin(), docs.end(), [](const Document* a, const Document* b) { return a->id < b->id; });
  for (const auto* d : docs) g.nodes.push_back(d->id);

  Corpus node_docs;
  for (const auto* d : docs) node_docs.push_back(*d);
  g.ordinal_maps = build_ordinal_maps(node_docs, spec, aliases);

  static const std::vector<Mention> kNone;
  g.features = Matrix(docs.size(), spec.size());
  g.lawpoints.resize(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto it = mentions.find(docs[i]->id);
    const auto& m = it == mentions.end() ? kNone : it->second;
    const auto row = encode_features(*docs[i], m, spec, aliases, g.ordinal_maps);
    std::copy(row.begin(), row.end(), g.features.row(i).begin());
    for (const auto& mention : m) ++g.lawpoints[i][mention.concept_label];
  }

  auto& cites = g.edges[std::string(relation::kCites)];
  auto& similar = g.edges[std::string(relation::kSimilarTo)];
  std::set<Edge> similar_seen;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& c : docs[i]->citations) {
      if (const auto j = g.index_of(c)) cites.push_back({i, *j});
    }
    if (const auto it = docs[i]->metadata.find(std::string(meta::kSimilarTo)); it != docs[i]->metadata.end()) {
      for (const auto& other : text::list_items(it->second)) {
        const auto j = g.index_of(other);
        if (!j || *j == i) continue;
        const Edge e{std::min(i, *j), std::max(i, *j)};
        if (similar_seen.insert(e).second) similar.push_back(e);
      }
    }
  }
  std::sort(cites.begin(), cites.end());
  cites.erase(std::unique(cites.begin(), cites.end()), cites.end());
  std::sort(similar.begin(), similar.end());
  return g;
}

/// Original edges followed by every edge reversed.
inline EdgeList to_undirected(const EdgeList& edges) {
  EdgeList out = edges;
  out.reserve(edges.size() * 2);
  for (const auto& e : edges) out.push_back({e.dst, e.src});
  return out;
}

// ---------------------------------------------------------------------------
// Splits and negatives

struct EdgeSplit {
  EdgeList train_pos;
  EdgeList test_pos;
  EdgeList train_neg;
  EdgeList test_neg;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;

  bool operator==(const EdgeSplit&) const = default;
};

/// Seeded uniform shuffle, then the first round(test_fraction * n) edges go to test.
inline EdgeSplit split_edges(const EdgeList& pos, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw UsageError("split_edges: test_fraction must lie in [0, 1]");
  }
  EdgeList shuffled = pos;
  Rng rng(seed);
  rng.shuffle(shuffled);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(pos.size())));
  EdgeSplit split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  split.test_pos.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train_pos.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
  return split;
}

namespace graph_detail {
inline std::uint64_t key(std::size_t a, std::size_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}
} // namespace graph_detail

/// `m` distinct ordered pairs (no self pairs) drawn uniformly from those absent from
/// `exclude` and from the relation's positive edges.
inline EdgeList sample_negatives(const CaseGraph& graph, const std::string& relation_name, std::size_t m,
                                 std::uint64_t seed, const EdgeList& exclude) {
  const std::size_t N = graph.size();
  if (m == 0) return {};
  std::unordered_set<std::uint64_t> forbidden;
  auto forbid = [&](const Edge& e) {
    if (e.src != e.dst && e.src < N && e.dst < N) forbidden.insert(graph_detail::key(e.src, e.dst));
  };
  for (const auto& e : exclude) forbid(e);
  if (const auto it = graph.edges.find(relation_name); it != graph.edges.end()) {
    for (const auto& e : it->second) forbid(e);
  }
  const std::size_t total = N * (N > 0 ? N - 1 : 0);
  const std::size_t available = total - forbidden.size();
  if (m > available) {
    throw DataError("sample_negatives: requested " + std::to_string(m) + " negatives but only " +
                    std::to_string(available) + " node pairs are available");
  }
  Rng rng(seed);
  EdgeList out;
  out.reserve(m);
  if (2 * m <= available) {
    std::unordered_set<std::uint64_t> taken;
    while (out.size() < m) {
      const auto a = rng.below(N);
      const auto b = rng.below(N);
      if (a == b) continue;
      const auto k = graph_detail::key(a, b);
      if (forbidden.contains(k) || !taken.insert(k).second) continue;
      out.push_back({a, b});
    }
  } else {
    EdgeList pool;
    pool.reserve(available);
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = 0; b < N; ++b) {
        if (a != b && !forbidden.contains(graph_detail::key(a, b))) pool.push_back({a, b});
      }
    }
    // Partial Fisher-Yates: the first m slots are a uniform sample.
    for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
  }
  return out;
}

/// Split the task relation's edges and attach negatives at `negative_ratio` per
/// positive. Negatives avoid both orientations of every positive, and train
/// negatives avoid test negatives.
inline EdgeSplit make_task_split(const CaseGraph& graph, const std::string& task, double test_fraction,
                                 std::size_t negative_ratio, std::uint64_t seed) {
  const auto& pos = graph.relation_edges(task);
  auto split = split_edges(pos, test_fraction, seed);
  EdgeList exclude = to_undirected(pos);
  split.test_neg = sample_negatives(graph, task, negative_ratio * split.test_pos.size(), seed + 1, exclude);
  const auto test_neg_both = to_undirected(split.test_neg);
  exclude.insert(exclude.end(), test_neg_both.begin(), test_neg_both.end());
  split.train_neg = sample_negatives(graph, task, negative_ratio * split.train_pos.size(), seed + 2, exclude);
  return split;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json edges_to_json(const EdgeList& edges) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& e : edges) j.push_back({e.src, e.dst});
  return j;
}

inline EdgeList edges_from_json(const nlohmann::json& j) {
  EdgeList out;
  for (const auto& e : j) out.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()});
  return out;
}

inline nlohmann::ordered_json to_json(const EdgeSplit& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["test_fraction"] = s.test_fraction;
  j["train_pos"] = edges_to_json(s.train_pos);
  j["test_pos"] = edges_to_json(s.test_pos);
  j["train_neg"] = edges_to_json(s.train_neg);
  j["test_neg"] = edges_to_json(s.test_neg);
  return j;
}

inline EdgeSplit split_from_json(const nlohmann::json& j) {
  EdgeSplit s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.test_fraction = j.at("test_fraction").get<double>();
  s.train_pos = edges_from_json(j.at("train_pos"));
  s.test_pos = edges_from_json(j.at("test_pos"));
  s.train_neg = edges_from_json(j.at("train_neg"));
  s.test_neg = edges_from_json(j.at("test_neg"));
  return s;
}

inline nlohmann::ordered_json to_json(const CaseGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = g.nodes;
  j["feature_spec"] = g.spec.to_json();
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto r = g.features.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["features"] = std::move(rows);
  j["edges"] = nlohmann::ordered_json::object();
  for (const auto& [name, list] : g.edges) j["edges"][name] = edges_to_json(list);
  j["lawpoints"] = nlohmann::ordered_json::array();
  for (const auto& lp : g.lawpoints) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [c, n] : lp) o[c] = n;
    j["lawpoints"].push_back(std::move(o));
  }
  j["ordinal_maps"] = nlohmann::ordered_json::object();
  for (const auto& [f, m] : g.ordinal_maps) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [label, code] : m) o[label] = code;
    j["ordinal_maps"][f] = std::move(o);
  }
  return j;
}

inline CaseGraph case_graph_from_json(const nlohmann::json& j) {
  CaseGraph g;
  try {
    g.nodes = j.at("nodes").get<std::vector<std::string>>();
    if (!std::is_sorted(g.nodes.begin(), g.nodes.end())) throw DataError("case graph nodes must be sorted by id");
    g.spec = FeatureSpec::from_json(j.at("feature_spec"));
    const auto& rows = j.at("features");
    if (rows.size() != g.nodes.size()) throw DataError("case graph feature rows do not match node count");
    g.features = Matrix(g.nodes.size(), g.spec.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = rows[i].get<std::vector<double>>();
      if (r.size() != g.spec.size()) throw DataError("case graph feature row " + std::to_string(i) + " has the wrong width");
      std::copy(r.begin(), r.end(), g.features.row(i).begin());
    }
    for (const auto& [name, list] : j.at("edges").items()) {
      auto edges = edges_from_json(list);
      for (const auto& e : edges) {
        if (e.src >= g.size() || e.dst >= g.size()) throw DataError("edge endpoint out of range in relation '" + name + "'");
      }
      g.edges[name] = std::move(edges);
    }
    if (const auto it = j.find("lawpoints"); it != j.end()) {
      for (const auto& o : *it) {
        std::map<std::string, std::size_t> m;
        for (const auto& [c, n] : o.items()) m[c] = n.get<std::size_t>();
        g.lawpoints.push_back(std::move(m));
      }
    }
    g.lawpoints.resize(g.nodes.size());
    if (const auto it = j.find("ordinal_maps"); it != j.end()) {
      for (const auto& [f, o] : it->items()) {
        for (const auto& [label, code] : o.items()) g.ordinal_maps[f][label] = code.get<int>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed case graph: ") + e.what());
  }
  return g;
}

inline void save_case_graph(const std::string& path, const CaseGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write case graph '" + path + "'");
  out << to_json(g).dump() << '\n';
}

inline CaseGraph load_case_graph(const std::string& path) {
  return case_graph_from_json(detail::read_json_file(path, "case graph"));
}

} // namespace lkg
