#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "auc.hpp"
#include "casegraph.hpp"
#include "error.hpp"
#include "gnn.hpp"

namespace lkg {

struct ScoredEdge {
  std::string src;
  std::string dst;
  double score = 0.0;
  int label = 0;

  bool operator==(const ScoredEdge&) const = default;
};

struct EvalReport {
  std::string task;
  double auc = 0.5;
  std::size_t n_test_pos = 0;
  std::size_t n_test_neg = 0;
  std::vector<ScoredEdge> edges; // positives first, then negatives, in split order

  bool operator==(const EvalReport&) const = default;
};

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["task"] = r.task;
  j["auc"] = r.auc;
  j["n_test_pos"] = r.n_test_pos;
  j["n_test_neg"] = r.n_test_neg;
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : r.edges) {
    j["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"score", e.score}, {"label", e.label}});
  }
  return j;
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.task = j.at("task").get<std::string>();
    r.auc = j.at("auc").get<double>();
    r.n_test_pos = j.at("n_test_pos").get<std::size_t>();
    r.n_test_neg = j.at("n_test_neg").get<std::size_t>();
    for (const auto& e : j.at("edges")) {
      r.edges.push_back({e.at("src").get<std::string>(), e.at("dst").get<std::string>(), e.at("score").get<double>(),
                         e.at("label").get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed eval report: ") + e.what());
  }
  if (!(r.auc >= 0.0 && r.auc <= 1.0)) throw DataError("eval report auc outside [0, 1]");
  if (r.edges.size() != r.n_test_pos + r.n_test_neg) throw DataError("eval report counts do not match its edge list");
  return r;
}

inline void write_scores_csv(std::ostream& out, const EvalReport& r) {
  out << "src,dst,score,label\n";
  char buf[32];
  for (const auto& e : r.edges) {
    std::snprintf(buf, sizeof buf, "%.17g", e.score);
    out << e.src << ',' << e.dst << ',' << buf << ',' << e.label << '\n';
  }
}

/// Scores the split's test edges with the task's DistMult diagonal (raw scores) and
/// reports their ROC-AUC.
inline EvalReport evaluate(const RgcnModel& model, const CaseGraph& graph, const Matrix& features,
                           const EdgeSplit& split, const std::string& task) {
  if (split.test_pos.empty() || split.test_neg.empty()) throw DataError("evaluate: the split has no test positives or negatives");
  const auto mg = task_message_graph(graph.size(), task, split.train_pos);
  const auto emb = rgcn_forward(mg, features, model);
  const auto& diag = model.diagonal(task);
  const auto pos = score_edges(emb, diag, split.test_pos);
  const auto neg = score_edges(emb, diag, split.test_neg);
  EvalReport r;
  r.task = task;
  r.auc = roc_auc(pos, neg);
  r.n_test_pos = pos.size();
  r.n_test_neg = neg.size();
  for (std::size_t i = 0; i < pos.size(); ++i) {
    r.edges.push_back({graph.nodes[split.test_pos[i].src], graph.nodes[split.test_pos[i].dst], pos[i], 1});
  }
  for (std::size_t i = 0; i < neg.size(); ++i) {
    r.edges.push_back({graph.nodes[split.test_neg[i].src], graph.nodes[split.test_neg[i].dst], neg[i], 0});
  }
  return r;
}

} // namespace lkg
