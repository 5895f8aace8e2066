#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "annotate.hpp"
#include "casegraph.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "explain.hpp"
#include "gnn.hpp"
#include "text.hpp"

namespace lkg {

/// One trained task model with its encoder output precomputed.
struct TaskModel {
  Checkpoint checkpoint;
  MessageGraph messages;
  Matrix embeddings;
};

/// Immutable snapshot served by the read-only API.
struct PipelineArtifacts {
  Corpus corpus;
  StatsReport stats;
  CaseGraph graph;
  Matrix features; // normalized
  std::map<std::string, TaskModel> models;

  /// Checks cross references and precomputes embeddings.
  void finalize() {
    for (const auto& id : graph.nodes) {
      if (!find_document(corpus, id)) throw DataError("graph node '" + id + "' is not in the corpus");
    }
    features = normalize_features(graph.features);
    const auto names = graph.spec.names();
    for (auto& [task, tm] : models) {
      const auto& ck = tm.checkpoint;
      if (ck.model.input_dim != features.cols) {
        throw DataError("model for '" + task + "' expects " + std::to_string(ck.model.input_dim) +
                        " features, graph has " + std::to_string(features.cols));
      }
      if (ck.feature_names != names) throw DataError("model for '" + task + "' was trained on a different feature spec");
      ck.model.diagonal(task);
      tm.messages = task_message_graph(graph.size(), task, ck.split.train_pos);
      tm.embeddings = rgcn_forward(tm.messages, features, ck.model);
    }
  }

  double link_probability(const std::string& task, std::size_t u, std::size_t v) const {
    const auto& tm = models.at(task);
    return sigmoid(distmult_score(tm.embeddings.row(u), tm.checkpoint.model.diagonal(task).row(0), tm.embeddings.row(v)));
  }
};

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  std::multimap<std::string, std::string> params;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  nlohmann::ordered_json body;
};

class Service {
public:
  explicit Service(const PipelineArtifacts& artifacts) : a_(artifacts) {}

  HttpResponse handle(const HttpRequest& req) const {
    try {
      return route(req);
    } catch (const NotFound& e) {
      return error(404, e.what());
    } catch (const BadRequest& e) {
      return error(400, e.what());
    } catch (const std::exception& e) {
      return error(500, e.what());
    }
  }

private:
  struct NotFound : std::runtime_error { using std::runtime_error::runtime_error; };
  struct BadRequest : std::runtime_error { using std::runtime_error::runtime_error; };

  static HttpResponse error(int status, const std::string& message) {
    return {status, {{"error", message}}};
  }

  HttpResponse route(const HttpRequest& req) const {
    const auto parts = text::split(req.path, '/');
    std::vector<std::string> seg;
    for (const auto& p : parts) {
      if (!p.empty()) seg.push_back(p);
    }
    if (req.method == "POST") {
      if (seg.size() == 1 && seg[0] == "predict") return predict(req);
      throw NotFound("no such endpoint: POST " + req.path);
    }
    if (req.method != "GET") throw BadRequest("unsupported method " + req.method);
    if (seg.size() == 1 && seg[0] == "stats") return {200, to_json(a_.stats)};
    if (seg.size() == 1 && seg[0] == "cases") return search(req);
    if (seg.size() == 2 && seg[0] == "cases") return case_detail(seg[1]);
    if (seg.size() == 3 && seg[0] == "cases" && seg[2] == "similar") return similar(seg[1], req);
    if (seg.size() == 1 && seg[0] == "explain") return explain(req);
    if (seg.size() == 1 && seg[0] == "subgraph") return subgraph(req);
    throw NotFound("no such endpoint: GET " + req.path);
  }

  // -- parameter helpers

  static std::optional<std::string> param(const HttpRequest& req, const std::string& key) {
    const auto it = req.params.find(key);
    if (it == req.params.end()) return std::nullopt;
    return it->second;
  }

  static std::size_t count_param(const HttpRequest& req, const std::string& key, std::size_t fallback,
                                 std::size_t min_value) {
    const auto v = param(req, key);
    if (!v) return fallback;
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size() || out < min_value) {
      throw BadRequest("parameter '" + key + "' must be an integer >= " + std::to_string(min_value));
    }
    return out;
  }

  static std::string required(const HttpRequest& req, const std::string& key) {
    const auto v = param(req, key);
    if (!v || v->empty()) throw BadRequest("missing parameter '" + key + "'");
    return *v;
  }

  std::size_t node(const std::string& id) const {
    const auto i = a_.graph.index_of(id);
    if (!i) throw NotFound("unknown case id '" + id + "'");
    return *i;
  }

  const std::string& task_of(const std::optional<std::string>& requested, std::string_view fallback) const {
    const std::string task = requested ? *requested : std::string(fallback);
    const auto it = a_.models.find(task);
    if (it == a_.models.end()) {
      if (!requested && !a_.models.empty()) return a_.models.begin()->first;
      throw BadRequest("no model loaded for task '" + task + "'");
    }
    return it->first;
  }

  nlohmann::ordered_json case_summary(std::size_t i) const {
    const auto* doc = find_document(a_.corpus, a_.graph.nodes[i]);
    return {{"id", doc->id},
            {"title", doc->title},
            {"court", doc->court},
            {"doc_type", std::string(to_string(doc->doc_type))},
            {"date", doc->date.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(doc->date)}};
  }

  // -- endpoints

  HttpResponse search(const HttpRequest& req) const {
    const auto q = text::lower(param(req, "q").value_or(""));
    const auto limit = count_param(req, "limit", 20, 1);
    nlohmann::ordered_json cases = nlohmann::ordered_json::array();
    std::size_t total = 0;
    for (std::size_t i = 0; i < a_.graph.size(); ++i) {
      const auto* doc = find_document(a_.corpus, a_.graph.nodes[i]);
      if (!q.empty() && text::lower(doc->title).find(q) == std::string::npos) continue;
      if (total++ < limit) cases.push_back(case_summary(i));
    }
    return {200, {{"total", total}, {"cases", std::move(cases)}}};
  }

  HttpResponse case_detail(const std::string& id) const {
    const auto i = node(id);
    nlohmann::ordered_json j;
    j["document"] = to_json(*find_document(a_.corpus, id));
    j["features"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < a_.graph.spec.size(); ++c) {
      j["features"].push_back({{"name", a_.graph.spec.features[c].name},
                               {"value", a_.graph.features(i, c)},
                               {"normalized", a_.features(i, c)}});
    }
    j["lawpoints"] = nlohmann::ordered_json::object();
    for (const auto& [c, n] : a_.graph.lawpoints[i]) j["lawpoints"][c] = n;
    return {200, std::move(j)};
  }

  HttpResponse similar(const std::string& id, const HttpRequest& req) const {
    const auto u = node(id);
    const auto k = count_param(req, "k", 10, 1);
    const auto& task = task_of(param(req, "task"), relation::kSimilarTo);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t v = 0; v < a_.graph.size(); ++v) {
      if (v != u) ranked.emplace_back(a_.link_probability(task, u, v), v);
    }
    const auto n = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < n; ++r) {
      const auto v = ranked[r].second;
      results.push_back({{"id", a_.graph.nodes[v]},
                         {"title", find_document(a_.corpus, a_.graph.nodes[v])->title},
                         {"score", ranked[r].first}});
    }
    return {200, {{"id", id}, {"task", task}, {"results", std::move(results)}}};
  }

  HttpResponse predict(const HttpRequest& req) const {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      throw BadRequest("request body is not valid JSON");
    }
    if (!body.is_object() || !body.contains("u") || !body.contains("v") || !body["u"].is_string() ||
        !body["v"].is_string()) {
      throw BadRequest("request body must be an object with string fields u and v");
    }
    std::optional<std::string> requested;
    if (body.contains("task")) {
      if (!body["task"].is_string()) throw BadRequest("task must be a string");
      requested = body["task"].get<std::string>();
    }
    const auto& task = task_of(requested, relation::kCites);
    const auto u = node(body["u"].get<std::string>());
    const auto v = node(body["v"].get<std::string>());
    return {200, {{"u", a_.graph.nodes[u]}, {"v", a_.graph.nodes[v]}, {"task", task}, {"score", a_.link_probability(task, u, v)}}};
  }

  HttpResponse explain(const HttpRequest& req) const {
    const auto u = node(required(req, "u"));
    const auto v = node(required(req, "v"));
    const auto k = count_param(req, "k", 5, 0);
    if (k > a_.graph.spec.size()) {
      throw BadRequest("k = " + std::to_string(k) + " exceeds the feature dimension " + std::to_string(a_.graph.spec.size()));
    }
    auto e = compare_nodes(a_.graph, a_.features, a_.corpus, u, v);
    if (!a_.models.empty()) {
      const auto& task = task_of(param(req, "task"), relation::kSimilarTo);
      const auto& tm = a_.models.at(task);
      e.link_score = a_.link_probability(task, u, v);
      e.top_attributions =
          attribute_link(tm.checkpoint.model, tm.messages, a_.features, a_.graph.spec.names(), task, u, v, k);
    }
    return {200, to_json(e)};
  }

  HttpResponse subgraph(const HttpRequest& req) const {
    const auto center = node(required(req, "center"));
    const auto hops = count_param(req, "hops", 1, 0);
    if (hops > 3) throw BadRequest("hops must be at most 3");
    const auto& task = task_of(param(req, "task"), relation::kCites);
    const auto it = a_.graph.edges.find(task);
    const EdgeList observed = it == a_.graph.edges.end() ? EdgeList{} : it->second;

    std::vector<std::vector<std::size_t>> adj(a_.graph.size());
    for (const auto& e : observed) {
      adj[e.src].push_back(e.dst);
      adj[e.dst].push_back(e.src);
    }
    std::map<std::size_t, std::size_t> depth{{center, 0}};
    std::queue<std::size_t> frontier;
    frontier.push(center);
    while (!frontier.empty()) {
      const auto x = frontier.front();
      frontier.pop();
      if (depth[x] == hops) continue;
      for (const auto y : adj[x]) {
        if (depth.emplace(y, depth[x] + 1).second) frontier.push(y);
      }
    }
    std::set<std::pair<std::size_t, std::size_t>> observed_set;
    for (const auto& e : observed) observed_set.emplace(e.src, e.dst);

    // Strongest unobserved links from the center anywhere in the graph, drawn as predictions.
    std::vector<std::pair<double, std::size_t>> predicted;
    for (std::size_t i = 0; i < a_.graph.size(); ++i) {
      if (i == center || observed_set.contains({center, i}) || observed_set.contains({i, center})) continue;
      predicted.emplace_back(a_.link_probability(task, center, i), i);
    }
    const auto n_pred = std::min<std::size_t>(5, predicted.size());
    std::partial_sort(predicted.begin(), predicted.begin() + static_cast<std::ptrdiff_t>(n_pred), predicted.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    predicted.resize(n_pred);

    std::set<std::size_t> members;
    for (const auto& [i, d] : depth) members.insert(i);
    for (const auto& [score, i] : predicted) members.insert(i);
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto i : members) {
      auto s = case_summary(i);
      const auto d = depth.find(i);
      s["hops"] = d == depth.end() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(d->second);
      nodes.push_back(std::move(s));
    }
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& e : observed) {
      if (depth.contains(e.src) && depth.contains(e.dst)) {
        edges.push_back({{"src", a_.graph.nodes[e.src]}, {"dst", a_.graph.nodes[e.dst]},
                         {"score", a_.link_probability(task, e.src, e.dst)}, {"observed", true}});
      }
    }
    for (const auto& [score, i] : predicted) {
      edges.push_back({{"src", a_.graph.nodes[center]}, {"dst", a_.graph.nodes[i]}, {"score", score}, {"observed", false}});
    }
    return {200, {{"center", a_.graph.nodes[center]}, {"task", task}, {"hops", hops}, {"nodes", std::move(nodes)},
                  {"edges", std::move(edges)}}};
  }

  const PipelineArtifacts& a_;
};

} // namespace lkg
