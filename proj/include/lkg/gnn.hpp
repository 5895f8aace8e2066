#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "auc.hpp"
#include "blob.hpp"
#include "casegraph.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "random.hpp"

namespace lkg {

// ---------------------------------------------------------------------------
// Message-passing structure

/// Directed relations over N nodes; a message flows src -> dst, so N_r(i) is the
/// set of sources of relation-r edges ending at i (multi-edges counted).
struct MessageGraph {
  std::size_t num_nodes = 0;
  std::vector<std::string> relation_names;
  std::vector<std::vector<std::vector<std::size_t>>> in_neighbors; // [relation][node] -> sources

  MessageGraph() = default;
  MessageGraph(std::size_t n, const std::vector<std::pair<std::string, EdgeList>>& relations) : num_nodes(n) {
    for (const auto& [name, edges] : relations) {
      relation_names.push_back(name);
      auto& lists = in_neighbors.emplace_back(n);
      for (const auto& e : edges) {
        if (e.src >= n || e.dst >= n) throw DataError("message edge endpoint out of range in relation '" + name + "'");
        lists[e.dst].push_back(e.src);
      }
    }
  }

  std::size_t num_relations() const { return relation_names.size(); }
};

/// The graph a task model passes messages over: the task relation's training
/// positives made undirected.
inline MessageGraph task_message_graph(std::size_t num_nodes, const std::string& task, const EdgeList& train_pos) {
  return MessageGraph(num_nodes, {{task, to_undirected(train_pos)}});
}

// ---------------------------------------------------------------------------
// Parameters

enum class LayerKind { kRgcn, kSageMean, kSagePool };

inline std::string_view to_string(LayerKind k) {
  switch (k) {
  case LayerKind::kRgcn: return "rgcn";
  case LayerKind::kSageMean: return "sage-mean";
  case LayerKind::kSagePool: return "sage-pool";
  }
  return "rgcn";
}

inline LayerKind parse_layer_kind(std::string_view s) {
  if (s == "rgcn") return LayerKind::kRgcn;
  if (s == "sage-mean") return LayerKind::kSageMean;
  if (s == "sage-pool") return LayerKind::kSagePool;
  throw UsageError("unknown layer kind '" + std::string(s) + "' (expected rgcn, sage-mean or sage-pool)");
}

// A sage layer computes W * concat(h_i, AGG_r(h_j)), stored as the split blocks
// W_0 (self half) and W_r (neighbor half); for one relation and mean aggregation it
// coincides with the rgcn rule.
struct LayerParams {
  LayerKind kind = LayerKind::kRgcn;
  std::vector<Matrix> w_rel; // one (out x in) per message relation
  Matrix w_self;             // (out x in)

  std::size_t in_dim() const { return w_self.cols; }
  std::size_t out_dim() const { return w_self.rows; }
};

struct RgcnModel {
  std::size_t input_dim = 0;
  std::vector<LayerParams> layers;
  std::map<std::string, Matrix> relation_diagonals; // each 1 x embedding_dim

  std::size_t embedding_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }

  const Matrix& diagonal(const std::string& relation) const {
    const auto it = relation_diagonals.find(relation);
    if (it == relation_diagonals.end()) throw DataError("model has no diagonal for relation '" + relation + "'");
    return it->second;
  }

  /// Parameter blocks in checkpoint order: per layer each W_r then W_0, then the
  /// relation diagonals by name.
  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& layer = self.layers[l];
      for (std::size_t r = 0; r < layer.w_rel.size(); ++r) {
        f("layer" + std::to_string(l) + ".w_rel" + std::to_string(r), layer.w_rel[r]);
      }
      f("layer" + std::to_string(l) + ".w_self", layer.w_self);
    }
    for (auto& [name, d] : self.relation_diagonals) f("diag." + name, d);
  }

  template <class F> void for_each_param(F&& f) { visit(*this, std::forward<F>(f)); }
  template <class F> void for_each_param(F&& f) const { visit(*this, std::forward<F>(f)); }

  RgcnModel zeros_like() const {
    RgcnModel z = *this;
    z.for_each_param([](const std::string&, Matrix& m) { m.fill(0.0); });
    return z;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_param([&](const std::string&, const Matrix& m) { n += m.data.size(); });
    return n;
  }
};

struct ModelShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> layer_dims; // output width per layer
  std::size_t num_relations = 1;
  std::vector<std::string> diagonal_relations;
  LayerKind kind = LayerKind::kRgcn;
};

inline RgcnModel zero_model(const ModelShape& shape) {
  if (shape.layer_dims.empty()) throw UsageError("model needs at least one layer");
  RgcnModel m;
  m.input_dim = shape.input_dim;
  std::size_t in = shape.input_dim;
  for (const auto out : shape.layer_dims) {
    if (out == 0 || in == 0) throw UsageError("model dimensions must be at least 1");
    LayerParams layer;
    layer.kind = shape.kind;
    layer.w_rel.assign(shape.num_relations, Matrix(out, in));
    layer.w_self = Matrix(out, in);
    m.layers.push_back(std::move(layer));
    in = out;
  }
  for (const auto& r : shape.diagonal_relations) m.relation_diagonals[r] = Matrix(1, in);
  return m;
}

/// Glorot-uniform initialization, a = sqrt(6 / (fan_in + fan_out)); a diagonal of
/// length h uses fan_in = fan_out = h.
inline void glorot_init(RgcnModel& model, Rng& rng) {
  model.for_each_param([&](const std::string& name, Matrix& m) {
    const bool diag = name.starts_with("diag.");
    const double fan_in = static_cast<double>(m.cols);
    const double fan_out = static_cast<double>(diag ? m.cols : m.rows);
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : m.data) v = rng.uniform(-a, a);
  });
}

// ---------------------------------------------------------------------------
// Forward

namespace gnn_detail {

struct LayerCache {
  Matrix input;                                  // N x in
  std::vector<Matrix> agg;                       // per relation, N x in
  std::vector<std::vector<std::size_t>> argmax;  // sage-pool only: per relation, N*in source ids
  Matrix pre;                                    // N x out
  bool relu = false;
};

inline constexpr std::size_t kNoSource = std::numeric_limits<std::size_t>::max();

inline void check_shapes(const MessageGraph& graph, const Matrix& features, const RgcnModel& model) {
  if (features.cols != model.input_dim) {
    throw DataError("feature dimension mismatch: model expects " + std::to_string(model.input_dim) +
                    " columns, features have " + std::to_string(features.cols));
  }
  if (features.rows != graph.num_nodes) {
    throw DataError("node count mismatch: graph has " + std::to_string(graph.num_nodes) +
                    " nodes, features have " + std::to_string(features.rows) + " rows");
  }
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].w_rel.size() != graph.num_relations()) {
      throw DataError("relation count mismatch in layer " + std::to_string(l) + ": model expects " +
                      std::to_string(model.layers[l].w_rel.size()) + ", graph has " +
                      std::to_string(graph.num_relations()));
    }
  }
}

inline Matrix forward(const MessageGraph& graph, const Matrix& features, const RgcnModel& model,
                      std::vector<LayerCache>* caches) {
  check_shapes(graph, features, model);
  Matrix h = features;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    const std::size_t n = h.rows, in = h.cols;
    if (in != layer.in_dim()) {
      throw DataError("layer " + std::to_string(l) + " expects input width " + std::to_string(layer.in_dim()) +
                      ", got " + std::to_string(in));
    }
    LayerCache cache;
    Matrix z(n, layer.out_dim());
    add_mul_transposed(h, layer.w_self, z);
    for (std::size_t r = 0; r < graph.num_relations(); ++r) {
      Matrix agg(n, in);
      std::vector<std::size_t> arg;
      if (layer.kind == LayerKind::kSagePool) arg.assign(n * in, kNoSource);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& nbrs = graph.in_neighbors[r][i];
        if (nbrs.empty()) continue;
        auto out = agg.row(i);
        if (layer.kind == LayerKind::kSagePool) {
          for (std::size_t k = 0; k < in; ++k) {
            std::size_t best = nbrs.front();
            for (const auto j : nbrs) {
              if (h(j, k) > h(best, k)) best = j;
            }
            out[k] = h(best, k);
            arg[i * in + k] = best;
          }
        } else {
          for (const auto j : nbrs) {
            const auto hj = h.row(j);
            for (std::size_t k = 0; k < in; ++k) out[k] += hj[k];
          }
          const double inv = 1.0 / static_cast<double>(nbrs.size());
          for (auto& v : out) v *= inv;
        }
      }
      add_mul_transposed(agg, layer.w_rel[r], z);
      if (caches) {
        cache.agg.push_back(std::move(agg));
        cache.argmax.push_back(std::move(arg));
      }
    }
    const bool relu = l + 1 < model.layers.size();
    Matrix next = z;
    if (relu) {
      for (auto& v : next.data) v = std::max(v, 0.0);
    }
    if (caches) {
      cache.input = std::move(h);
      cache.pre = std::move(z);
      cache.relu = relu;
      caches->push_back(std::move(cache));
    }
    h = std::move(next);
  }
  return h;
}

} // namespace gnn_detail

/// Node embeddings: h_i' = act(sum_r mean_{j in N_r(i)} W_r h_j + W_0 h_i) per layer,
/// ReLU between layers and identity on the last.
inline Matrix rgcn_forward(const MessageGraph& graph, const Matrix& features, const RgcnModel& model) {
  return gnn_detail::forward(graph, features, model, nullptr);
}

inline std::vector<double> sage_aggregate(std::span<const double> h_self,
                                          const std::vector<std::vector<double>>& neighbors, LayerKind kind) {
  if (kind == LayerKind::kRgcn) throw UsageError("sage_aggregate: kind must be sage-mean or sage-pool");
  const std::size_t h = h_self.size();
  std::vector<double> out(h_self.begin(), h_self.end());
  out.resize(2 * h, 0.0);
  for (std::size_t n = 0; n < neighbors.size(); ++n) {
    if (neighbors[n].size() != h) {
      throw DataError("sage_aggregate: neighbor " + std::to_string(n) + " has length " +
                      std::to_string(neighbors[n].size()) + ", expected " + std::to_string(h));
    }
  }
  if (neighbors.empty()) return out;
  for (std::size_t k = 0; k < h; ++k) {
    if (kind == LayerKind::kSagePool) {
      double m = neighbors.front()[k];
      for (const auto& nb : neighbors) m = std::max(m, nb[k]);
      out[h + k] = m;
    } else {
      double s = 0.0;
      for (const auto& nb : neighbors) s += nb[k];
      out[h + k] = s / static_cast<double>(neighbors.size());
    }
  }
  return out;
}

inline double distmult_score(std::span<const double> e_s, std::span<const double> r_diag, std::span<const double> e_o) {
  if (e_s.size() != r_diag.size() || e_o.size() != r_diag.size()) {
    throw DataError("distmult_score: length mismatch (" + std::to_string(e_s.size()) + ", " +
                    std::to_string(r_diag.size()) + ", " + std::to_string(e_o.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < r_diag.size(); ++k) s += e_s[k] * e_o[k] * r_diag[k];
  return s;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline std::vector<double> score_edges(const Matrix& embeddings, const Matrix& diagonal, const EdgeList& edges) {
  std::vector<double> out;
  out.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.src >= embeddings.rows || e.dst >= embeddings.rows) throw DataError("scored edge endpoint out of range");
    out.push_back(distmult_score(embeddings.row(e.src), diagonal.row(0), embeddings.row(e.dst)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss and gradients

struct LossAndGrads {
  double loss = 0.0;
  RgcnModel grads;
};

/// Mean binary cross-entropy of sigmoid(distmult) over positives (label 1) and
/// negatives (label 0), with gradients for every parameter block.
inline LossAndGrads loss_and_grads(const RgcnModel& model, const MessageGraph& graph, const Matrix& features,
                                   const std::string& task, const EdgeList& pos, const EdgeList& neg) {
  if (pos.empty() || neg.empty()) throw UsageError("loss_and_grads: positive and negative edge lists must be nonempty");
  std::vector<gnn_detail::LayerCache> caches;
  const Matrix emb = gnn_detail::forward(graph, features, model, &caches);
  const Matrix& diag = model.diagonal(task);
  const std::size_t h = emb.cols;

  LossAndGrads out;
  out.grads = model.zeros_like();
  Matrix d_emb(emb.rows, h);
  auto& d_diag = out.grads.relation_diagonals.at(task);
  const double inv_m = 1.0 / static_cast<double>(pos.size() + neg.size());

  auto accumulate = [&](const EdgeList& edges, double label) {
    for (const auto& e : edges) {
      if (e.src >= emb.rows || e.dst >= emb.rows) throw DataError("training edge endpoint out of range");
      const auto es = emb.row(e.src), eo = emb.row(e.dst);
      const double s = distmult_score(es, diag.row(0), eo);
      out.loss += (label > 0.5 ? softplus(-s) : softplus(s)) * inv_m;
      const double g = (sigmoid(s) - label) * inv_m;
      auto ds = d_emb.row(e.src);
      auto dd = d_diag.row(0);
      for (std::size_t k = 0; k < h; ++k) {
        dd[k] += g * es[k] * eo[k];
        ds[k] += g * diag(0, k) * eo[k];
      }
      auto dov = d_emb.row(e.dst);
      for (std::size_t k = 0; k < h; ++k) dov[k] += g * diag(0, k) * es[k];
    }
  };
  accumulate(pos, 1.0);
  accumulate(neg, 0.0);
  if (!std::isfinite(out.loss)) throw DataError("loss is not finite");

  Matrix d_out = std::move(d_emb);
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    auto& glayer = out.grads.layers[l];
    const auto& cache = caches[l];
    Matrix dz = std::move(d_out);
    if (cache.relu) {
      for (std::size_t i = 0; i < dz.data.size(); ++i) {
        if (cache.pre.data[i] <= 0.0) dz.data[i] = 0.0;
      }
    }
    add_transposed_product(dz, cache.input, glayer.w_self);
    Matrix dh(cache.input.rows, cache.input.cols);
    add_mul(dz, layer.w_self, dh);
    for (std::size_t r = 0; r < graph.num_relations(); ++r) {
      add_transposed_product(dz, cache.agg[r], glayer.w_rel[r]);
      if (l == 0) continue; // no gradient needed w.r.t. the input features
      Matrix dagg(cache.input.rows, cache.input.cols);
      add_mul(dz, layer.w_rel[r], dagg);
      const std::size_t in = cache.input.cols;
      for (std::size_t i = 0; i < graph.num_nodes; ++i) {
        const auto& nbrs = graph.in_neighbors[r][i];
        if (nbrs.empty()) continue;
        const auto gi = dagg.row(i);
        if (layer.kind == LayerKind::kSagePool) {
          for (std::size_t k = 0; k < in; ++k) dh(cache.argmax[r][i * in + k], k) += gi[k];
        } else {
          const double inv = 1.0 / static_cast<double>(nbrs.size());
          for (const auto j : nbrs) {
            auto dj = dh.row(j);
            for (std::size_t k = 0; k < in; ++k) dj[k] += gi[k] * inv;
          }
        }
      }
    }
    d_out = std::move(dh);
  }
  return out;
}

inline double loss_only(const RgcnModel& model, const MessageGraph& graph, const Matrix& features,
                        const std::string& task, const EdgeList& pos, const EdgeList& neg) {
  if (pos.empty() || neg.empty()) throw UsageError("loss: positive and negative edge lists must be nonempty");
  const Matrix emb = rgcn_forward(graph, features, model);
  const Matrix& diag = model.diagonal(task);
  double loss = 0.0;
  const double inv_m = 1.0 / static_cast<double>(pos.size() + neg.size());
  for (const double s : score_edges(emb, diag, pos)) loss += softplus(-s) * inv_m;
  for (const double s : score_edges(emb, diag, neg)) loss += softplus(s) * inv_m;
  if (!std::isfinite(loss)) throw DataError("loss is not finite");
  return loss;
}

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { kSgd, kAdam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam" || s == "adaptive-moment") return OptimizerKind::kAdam;
  throw UsageError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

class Optimizer {
public:
  Optimizer(OptimizerKind kind, double lr, const RgcnModel& shape)
      : kind_(kind), lr_(lr), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

  void step(RgcnModel& model, const RgcnModel& grads) {
    ++t_;
    std::vector<Matrix*> params, ms, vs;
    std::vector<const Matrix*> gs;
    model.for_each_param([&](const std::string&, Matrix& p) { params.push_back(&p); });
    grads.for_each_param([&](const std::string&, const Matrix& g) { gs.push_back(&g); });
    m_.for_each_param([&](const std::string&, Matrix& m) { ms.push_back(&m); });
    v_.for_each_param([&](const std::string&, Matrix& v) { vs.push_back(&v); });
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto& p = params[b]->data;
      const auto& g = gs[b]->data;
      if (kind_ == OptimizerKind::kSgd) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
        continue;
      }
      auto& m = ms[b]->data;
      auto& v = vs[b]->data;
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
    }
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

private:
  OptimizerKind kind_;
  double lr_;
  RgcnModel m_, v_;
  long t_ = 0;
};

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::string task = "cites";
  std::size_t epochs = 600;
  double learning_rate = 0.01;
  std::size_t hidden_dim = 16;
  std::size_t embedding_dim = 16;
  std::size_t negative_ratio = 1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  LayerKind layer_kind = LayerKind::kRgcn;
  std::size_t auc_every = 50;

  void validate() const {
    if (epochs < 1) throw UsageError("epochs must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be positive");
    if (hidden_dim < 1 || embedding_dim < 1) throw UsageError("hidden and embedding dimensions must be at least 1");
    if (negative_ratio < 1) throw UsageError("negative ratio must be at least 1");
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw UsageError("test fraction must lie in [0, 1]");
    if (task.empty()) throw UsageError("task relation must be named");
  }

  nlohmann::ordered_json to_json() const {
    return {{"task", task},
            {"epochs", epochs},
            {"learning_rate", learning_rate},
            {"hidden_dim", hidden_dim},
            {"embedding_dim", embedding_dim},
            {"negative_ratio", negative_ratio},
            {"test_fraction", test_fraction},
            {"seed", seed},
            {"optimizer", std::string(to_string(optimizer))},
            {"layer_kind", std::string(to_string(layer_kind))},
            {"auc_every", auc_every}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.task = j.value("task", c.task);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.negative_ratio = j.value("negative_ratio", c.negative_ratio);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.seed = j.value("seed", c.seed);
    c.optimizer = parse_optimizer(j.value("optimizer", std::string("adam")));
    c.layer_kind = parse_layer_kind(j.value("layer_kind", std::string("rgcn")));
    c.auc_every = j.value("auc_every", c.auc_every);
    return c;
  }
};

inline ModelShape model_shape(const TrainConfig& config, std::size_t input_dim) {
  return {input_dim, {config.hidden_dim, config.embedding_dim}, 1, {config.task}, config.layer_kind};
}

struct TrainReport {
  std::vector<double> losses;                        // one per epoch
  std::vector<std::pair<std::size_t, double>> aucs;  // (epoch, test AUC)

  bool operator==(const TrainReport&) const = default;
};

inline nlohmann::ordered_json to_json(const TrainReport& r) {
  nlohmann::ordered_json j;
  j["losses"] = r.losses;
  j["aucs"] = nlohmann::ordered_json::array();
  for (const auto& [e, a] : r.aucs) j["aucs"].push_back({{"epoch", e}, {"auc", a}});
  return j;
}

struct TrainedModel {
  RgcnModel model;
  TrainReport report;
};

/// Full-batch training on split.train_pos / split.train_neg; messages pass over the
/// undirected training positives. Test AUC is recorded every `auc_every` epochs and at
/// the last epoch when the split has test edges.
inline TrainedModel train(const Matrix& features, const EdgeSplit& split, const TrainConfig& config) {
  config.validate();
  if (split.train_pos.empty() || split.train_neg.empty()) throw DataError("training split has no positive or no negative edges");
  const auto graph = task_message_graph(features.rows, config.task, split.train_pos);
  TrainedModel out;
  out.model = zero_model(model_shape(config, features.cols));
  Rng rng(config.seed);
  glorot_init(out.model, rng);
  Optimizer opt(config.optimizer, config.learning_rate, out.model);
  const bool has_test = !split.test_pos.empty() && !split.test_neg.empty();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    LossAndGrads lg;
    try {
      lg = loss_and_grads(out.model, graph, features, config.task, split.train_pos, split.train_neg);
    } catch (const DataError& e) {
      throw DataError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    out.report.losses.push_back(lg.loss);
    opt.step(out.model, lg.grads);
    if (has_test && config.auc_every > 0 && (epoch % config.auc_every == 0 || epoch == config.epochs)) {
      const auto emb = rgcn_forward(graph, features, out.model);
      const auto& d = out.model.diagonal(config.task);
      out.report.aucs.emplace_back(epoch, roc_auc(score_edges(emb, d, split.test_pos), score_edges(emb, d, split.test_neg)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  RgcnModel model;
  TrainConfig config;
  EdgeSplit split;
  std::vector<std::string> feature_names;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::ordered_json manifest;
  manifest["kind"] = "rgcn";
  manifest["input_dim"] = ck.model.input_dim;
  auto dims = nlohmann::ordered_json::array();
  for (const auto& l : ck.model.layers) dims.push_back(l.out_dim());
  manifest["layer_dims"] = dims;
  manifest["layer_kind"] = ck.model.layers.empty() ? "rgcn" : std::string(to_string(ck.model.layers.front().kind));
  manifest["num_message_relations"] = ck.model.layers.empty() ? 0 : ck.model.layers.front().w_rel.size();
  auto rels = nlohmann::ordered_json::array();
  for (const auto& [r, d] : ck.model.relation_diagonals) rels.push_back(r);
  manifest["relations"] = rels;
  manifest["feature_names"] = ck.feature_names;
  manifest["config"] = ck.config.to_json();
  manifest["split"] = to_json(ck.split);
  std::vector<BlobBlock> blocks;
  ck.model.for_each_param([&](const std::string& name, const Matrix& m) {
    blocks.push_back({name, m.rows, m.cols, std::span<const double>(m.data)});
  });
  write_blob(path, std::move(manifest), blocks);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  const auto blob = read_blob(path);
  const auto& j = blob.manifest;
  Checkpoint ck;
  try {
    if (j.at("kind").get<std::string>() != "rgcn") throw DataError("'" + path + "' is not a model checkpoint");
    ModelShape shape;
    shape.input_dim = j.at("input_dim").get<std::size_t>();
    shape.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    shape.kind = parse_layer_kind(j.at("layer_kind").get<std::string>());
    shape.num_relations = j.at("num_message_relations").get<std::size_t>();
    shape.diagonal_relations = j.at("relations").get<std::vector<std::string>>();
    ck.model = zero_model(shape);
    ck.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    ck.config = TrainConfig::from_json(j.at("config"));
    ck.split = split_from_json(j.at("split"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path + "' has a malformed manifest: " + e.what());
  } catch (const UsageError& e) {
    throw DataError("checkpoint '" + path + "': " + e.what());
  }
  ck.model.for_each_param([&](const std::string& name, Matrix& m) {
    const auto& v = blob.block(name);
    if (v.size() != m.data.size()) throw DataError("checkpoint block '" + name + "' has the wrong size");
    m.data = v;
  });
  return ck;
}

} // namespace lkg
