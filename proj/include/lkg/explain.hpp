#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "casegraph.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "gnn.hpp"

namespace lkg {

struct FeatureDiff {
  std::string name;
  double value_u = 0.0;
  double value_v = 0.0;
  double normalized_diff = 0.0; // |z_u - z_v|
};

struct MetadataPair {
  std::string key;
  std::string value_u;
  std::string value_v;
};

struct Attribution {
  std::string feature;
  double score_drop = 0.0;
};

struct Explanation {
  std::string u;
  std::string v;
  std::optional<double> link_score;
  std::vector<std::string> shared_lawpoints;
  std::vector<FeatureDiff> feature_diffs;
  std::vector<MetadataPair> metadata_pairs;
  std::vector<Attribution> top_attributions;
};

inline nlohmann::ordered_json to_json(const Explanation& e) {
  nlohmann::ordered_json j;
  j["u"] = e.u;
  j["v"] = e.v;
  j["link_score"] = e.link_score ? nlohmann::ordered_json(*e.link_score) : nlohmann::ordered_json(nullptr);
  j["shared_lawpoints"] = e.shared_lawpoints;
  j["feature_diffs"] = nlohmann::ordered_json::array();
  for (const auto& d : e.feature_diffs) {
    j["feature_diffs"].push_back(
        {{"name", d.name}, {"value_u", d.value_u}, {"value_v", d.value_v}, {"normalized_diff", d.normalized_diff}});
  }
  j["metadata_pairs"] = nlohmann::ordered_json::array();
  for (const auto& m : e.metadata_pairs) {
    j["metadata_pairs"].push_back({{"key", m.key}, {"value_u", m.value_u}, {"value_v", m.value_v}});
  }
  j["top_attributions"] = nlohmann::ordered_json::array();
  for (const auto& a : e.top_attributions) {
    j["top_attributions"].push_back({{"feature", a.feature}, {"score_drop", a.score_drop}});
  }
  return j;
}

namespace explain_detail {

inline void check_node(const CaseGraph& graph, std::size_t i) {
  if (i >= graph.size()) {
    throw DataError("node index " + std::to_string(i) + " out of range (graph has " + std::to_string(graph.size()) + " nodes)");
  }
}

inline std::map<std::string, std::string> visible_metadata(const Document* doc) {
  std::map<std::string, std::string> m;
  if (!doc) return m;
  m["title"] = doc->title;
  m["court"] = doc->court;
  m["doc_type"] = std::string(to_string(doc->doc_type));
  m["date"] = doc->date;
  for (const auto& [k, v] : doc->metadata) m[k] = v;
  return m;
}

} // namespace explain_detail

/// Side-by-side listing of raw and normalized feature values plus document
/// metadata. `normalized` is the z-scored feature matrix the models consume.
inline Explanation compare_nodes(const CaseGraph& graph, const Matrix& normalized, const Corpus& corpus,
                                 std::size_t u, std::size_t v) {
  explain_detail::check_node(graph, u);
  explain_detail::check_node(graph, v);
  if (normalized.rows != graph.size() || normalized.cols != graph.spec.size()) {
    throw DataError("compare_nodes: normalized feature matrix does not match the graph");
  }
  Explanation e;
  e.u = graph.nodes[u];
  e.v = graph.nodes[v];
  for (const auto& [concept_label, n] : graph.lawpoints[u]) {
    const auto it = graph.lawpoints[v].find(concept_label);
    if (n > 0 && it != graph.lawpoints[v].end() && it->second > 0) e.shared_lawpoints.push_back(concept_label);
  }
  for (std::size_t c = 0; c < graph.spec.size(); ++c) {
    e.feature_diffs.push_back({graph.spec.features[c].name, graph.features(u, c), graph.features(v, c),
                               std::abs(normalized(u, c) - normalized(v, c))});
  }
  const auto mu = explain_detail::visible_metadata(find_document(corpus, e.u));
  const auto mv = explain_detail::visible_metadata(find_document(corpus, e.v));
  std::set<std::string> keys;
  for (const auto& [k, _] : mu) keys.insert(k);
  for (const auto& [k, _] : mv) keys.insert(k);
  for (const auto& k : keys) {
    const auto a = mu.find(k);
    const auto b = mv.find(k);
    e.metadata_pairs.push_back({k, a == mu.end() ? "" : a->second, b == mv.end() ? "" : b->second});
  }
  return e;
}

inline Explanation compare_nodes(const CaseGraph& graph, const Corpus& corpus, std::size_t u, std::size_t v) {
  return compare_nodes(graph, normalize_features(graph.features), corpus, u, v);
}

/// Occlusion attribution: for each feature column, zero it in rows u and v, rerun the
/// encoder, and record original score minus occluded score. Returns the top k,
/// largest drop first (ties keep column order).
inline std::vector<Attribution> attribute_link(const RgcnModel& model, const MessageGraph& graph, const Matrix& features,
                                               const std::vector<std::string>& feature_names, const std::string& task,
                                               std::size_t u, std::size_t v, std::size_t k) {
  if (k > features.cols) {
    throw UsageError("attribute_link: k = " + std::to_string(k) + " exceeds the feature dimension " +
                     std::to_string(features.cols));
  }
  if (feature_names.size() != features.cols) throw DataError("attribute_link: feature name count does not match columns");
  if (u >= features.rows || v >= features.rows) throw DataError("attribute_link: node index out of range");
  const auto& diag = model.diagonal(task);
  auto score = [&](const Matrix& x) {
    const auto emb = rgcn_forward(graph, x, model);
    return distmult_score(emb.row(u), diag.row(0), emb.row(v));
  };
  const double base = score(features);
  std::vector<Attribution> all;
  Matrix occluded = features;
  for (std::size_t c = 0; c < features.cols; ++c) {
    occluded(u, c) = 0.0;
    occluded(v, c) = 0.0;
    all.push_back({feature_names[c], base - score(occluded)});
    occluded(u, c) = features(u, c);
    occluded(v, c) = features(v, c);
  }
  std::stable_sort(all.begin(), all.end(), [](const Attribution& a, const Attribution& b) { return a.score_drop > b.score_drop; });
  all.resize(k);
  return all;
}

} // namespace lkg
