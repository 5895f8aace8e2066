#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace lkg;
using lkg::testing::random_edges;
using lkg::testing::random_matrix;
using lkg::testing::TempDir;

namespace {

RgcnModel random_model(std::size_t d, std::vector<std::size_t> dims, std::size_t relations, LayerKind kind,
                       Rng& rng, std::vector<std::string> diagonals = {"r0"}) {
  auto m = zero_model({d, std::move(dims), relations, std::move(diagonals), kind});
  m.for_each_param([&](const std::string&, Matrix& p) {
    for (auto& v : p.data) v = rng.uniform(-1.0, 1.0);
  });
  return m;
}

MessageGraph random_graph(std::size_t n, std::size_t relations, std::size_t edges_per_relation, Rng& rng) {
  std::vector<std::pair<std::string, EdgeList>> rels;
  for (std::size_t r = 0; r < relations; ++r) rels.emplace_back("r" + std::to_string(r), random_edges(n, edges_per_relation, rng));
  return MessageGraph(n, rels);
}

// Direct transcription of the layer rule, one node and one output unit at a time.
Matrix reference_forward(const MessageGraph& g, const Matrix& x, const RgcnModel& model) {
  Matrix h = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Matrix next(h.rows, layer.out_dim());
    for (std::size_t i = 0; i < h.rows; ++i) {
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        double z = 0.0;
        for (std::size_t k = 0; k < h.cols; ++k) z += layer.w_self(o, k) * h(i, k);
        for (std::size_t r = 0; r < g.num_relations(); ++r) {
          const auto& nb = g.in_neighbors[r][i];
          if (nb.empty()) continue;
          std::vector<std::vector<double>> vecs;
          for (const auto j : nb) vecs.emplace_back(h.row(j).begin(), h.row(j).end());
          std::vector<double> agg(h.cols, 0.0);
          if (layer.kind == LayerKind::kSagePool) {
            const auto cat = sage_aggregate(h.row(i), vecs, LayerKind::kSagePool);
            std::copy(cat.begin() + static_cast<std::ptrdiff_t>(h.cols), cat.end(), agg.begin());
          } else {
            for (const auto& v : vecs) {
              for (std::size_t k = 0; k < h.cols; ++k) agg[k] += v[k] / static_cast<double>(nb.size());
            }
          }
          for (std::size_t k = 0; k < h.cols; ++k) z += layer.w_rel[r](o, k) * agg[k];
        }
        next(i, o) = l + 1 < model.layers.size() ? std::max(z, 0.0) : z;
      }
    }
    h = std::move(next);
  }
  return h;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

} // namespace

// ---- rgcn_forward

TEST(RgcnForward, SingleNodeIdentitySelfLoop) {
  auto model = zero_model({3, {3}, 1, {"r"}, LayerKind::kRgcn});
  model.layers[0].w_self = Matrix::identity(3);
  Matrix x(1, 3);
  x.data = {0.5, -2.0, 7.0};
  const MessageGraph g(1, {{"r", {}}});
  EXPECT_EQ(rgcn_forward(g, x, model), x);
}

TEST(RgcnForward, TwoNodeSwap) {
  auto model = zero_model({2, {2}, 1, {"r"}, LayerKind::kRgcn});
  model.layers[0].w_rel[0] = Matrix::identity(2);
  Matrix x(2, 2);
  x.data = {1, 2, 3, 4};
  const MessageGraph g(2, {{"r", to_undirected({{0, 1}})}});
  const auto out = rgcn_forward(g, x, model);
  EXPECT_EQ(out.data, (std::vector<double>{3, 4, 1, 2}));
}

TEST(RgcnForward, OutputShape) {
  Rng rng(1);
  for (std::size_t n : {1u, 5u, 17u}) {
    const auto g = random_graph(n, 2, 2 * n, rng);
    const auto model = random_model(4, {6, 3}, 2, LayerKind::kRgcn, rng);
    const auto out = rgcn_forward(g, random_matrix(n, 4, rng), model);
    EXPECT_EQ(out.rows, n);
    EXPECT_EQ(out.cols, 3u);
  }
}

TEST(RgcnForward, DimensionMismatchStatesBoth) {
  Rng rng(2);
  const auto model = random_model(4, {3}, 1, LayerKind::kRgcn, rng);
  const MessageGraph g(2, {{"r", {}}});
  try {
    rgcn_forward(g, random_matrix(2, 5, rng), model);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('4'), std::string::npos);
    EXPECT_NE(msg.find('5'), std::string::npos);
  }
  EXPECT_THROW(rgcn_forward(MessageGraph(3, {{"r", {}}}), random_matrix(2, 4, rng), model), DataError);
  EXPECT_THROW(rgcn_forward(MessageGraph(2, {{"a", {}}, {"b", {}}}), random_matrix(2, 4, rng), model), DataError);
}

TEST(RgcnForward, AgreesWithReferenceForEveryLayerKind) {
  Rng rng(3);
  for (auto kind : {LayerKind::kRgcn, LayerKind::kSageMean, LayerKind::kSagePool}) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 1 + rng.below(12);
      const auto g = random_graph(n, 1 + rng.below(2), rng.below(3 * n), rng);
      const auto model = random_model(3, {4, 2}, g.num_relations(), kind, rng);
      const auto x = random_matrix(n, 3, rng);
      EXPECT_LE(max_abs_diff(rgcn_forward(g, x, model), reference_forward(g, x, model)), 1e-12);
    }
  }
}

TEST(RgcnForward, PermutationEquivariance) {
  Rng rng(4);
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t n = 1 + rng.below(15);
    const std::size_t relations = 1 + rng.below(2);
    const auto kind = static_cast<LayerKind>(rng.below(3));
    std::vector<std::pair<std::string, EdgeList>> rels;
    for (std::size_t r = 0; r < relations; ++r) rels.emplace_back("r" + std::to_string(r), random_edges(n, rng.below(3 * n + 1), rng));
    const auto x = random_matrix(n, 3, rng);
    const auto model = random_model(3, {4, 2}, relations, kind, rng);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix px(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < 3; ++k) px(perm[i], k) = x(i, k);
    }
    auto prels = rels;
    for (auto& [name, edges] : prels) {
      for (auto& e : edges) e = {perm[e.src], perm[e.dst]};
      rng.shuffle(edges);
    }
    const auto out = rgcn_forward(MessageGraph(n, rels), x, model);
    const auto pout = rgcn_forward(MessageGraph(n, prels), px, model);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < out.cols; ++k) ASSERT_NEAR(pout(perm[i], k), out(i, k), 1e-9);
    }
  }
}

TEST(RgcnForward, SageMeanMatchesRgcnForOneRelation) {
  Rng rng(5);
  const auto g = random_graph(9, 1, 20, rng);
  auto model = random_model(3, {4, 2}, 1, LayerKind::kRgcn, rng);
  const auto x = random_matrix(9, 3, rng);
  const auto a = rgcn_forward(g, x, model);
  for (auto& l : model.layers) l.kind = LayerKind::kSageMean;
  EXPECT_EQ(rgcn_forward(g, x, model), a);
}

// ---- sage_aggregate

TEST(SageAggregate, Examples) {
  const std::vector<double> self = {1, 0};
  const std::vector<std::vector<double>> nb = {{0, 2}, {2, 0}};
  EXPECT_EQ(sage_aggregate(self, nb, LayerKind::kSageMean), (std::vector<double>{1, 0, 1, 1}));
  EXPECT_EQ(sage_aggregate(self, {}, LayerKind::kSageMean), (std::vector<double>{1, 0, 0, 0}));
  EXPECT_EQ(sage_aggregate(self, nb, LayerKind::kSagePool), (std::vector<double>{1, 0, 2, 2}));
  EXPECT_THROW(sage_aggregate(self, {{1, 2, 3}}, LayerKind::kSageMean), DataError);
}

TEST(SageAggregate, OutputLengthIsTwiceInput) {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t h = rng.below(6);
    std::vector<double> self(h);
    for (auto& v : self) v = rng.normal();
    std::vector<std::vector<double>> nb(rng.below(4), std::vector<double>(h));
    for (auto& v : nb) {
      for (auto& e : v) e = rng.normal();
    }
    const auto kind = rng.bernoulli(0.5) ? LayerKind::kSageMean : LayerKind::kSagePool;
    EXPECT_EQ(sage_aggregate(self, nb, kind).size(), 2 * h);
  }
}

// ---- distmult

TEST(DistMult, Examples) {
  EXPECT_EQ(distmult_score(std::vector<double>{1, 2}, std::vector<double>{1, 1}, std::vector<double>{3, 4}), 11.0);
  EXPECT_EQ(distmult_score(std::vector<double>{1, 2}, std::vector<double>{0, 0}, std::vector<double>{3, 4}), 0.0);
  EXPECT_THROW(distmult_score(std::vector<double>{1}, std::vector<double>{1, 1}, std::vector<double>{1, 1}), DataError);
}

TEST(DistMult, SymmetricAndHomogeneous) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t h = 1 + rng.below(8);
    std::vector<double> s(h), r(h), o(h);
    for (std::size_t k = 0; k < h; ++k) {
      s[k] = rng.normal();
      r[k] = rng.normal();
      o[k] = rng.normal();
    }
    EXPECT_EQ(distmult_score(s, r, o), distmult_score(o, r, s));
    const double c = rng.uniform(0.1, 10.0);
    std::vector<double> cs(h);
    for (std::size_t k = 0; k < h; ++k) cs[k] = c * s[k];
    EXPECT_NEAR(distmult_score(cs, r, o), c * distmult_score(s, r, o), 1e-12 * (1 + std::abs(c * distmult_score(s, r, o))));
  }
}

// ---- loss and gradients

TEST(Loss, ZeroScoresGiveLn2) {
  Rng rng(8);
  const auto g = random_graph(6, 1, 8, rng);
  const auto model = zero_model({3, {4, 2}, 1, {"r0"}, LayerKind::kRgcn});
  const auto x = random_matrix(6, 3, rng);
  const auto lg = loss_and_grads(model, g, x, "r0", {{0, 1}, {2, 3}}, {{4, 5}});
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-15);
}

TEST(Loss, DuplicatingEdgesLeavesLossUnchanged) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_graph(8, 1, 10, rng);
    const auto model = random_model(3, {4, 2}, 1, LayerKind::kRgcn, rng);
    const auto x = random_matrix(8, 3, rng);
    const auto pos = random_edges(8, 1 + rng.below(6), rng);
    const auto neg = random_edges(8, 1 + rng.below(6), rng);
    auto pos2 = pos, neg2 = neg;
    pos2.insert(pos2.end(), pos.begin(), pos.end());
    neg2.insert(neg2.end(), neg.begin(), neg.end());
    const double a = loss_only(model, g, x, "r0", pos, neg);
    EXPECT_NEAR(loss_only(model, g, x, "r0", pos2, neg2), a, 1e-12 * (1 + a));
    EXPECT_NEAR(loss_and_grads(model, g, x, "r0", pos, neg).loss, a, 1e-12 * (1 + a));
  }
}

TEST(Loss, NonFiniteIsAnError) {
  Rng rng(10);
  const auto g = random_graph(4, 1, 4, rng);
  const auto model = random_model(2, {2}, 1, LayerKind::kRgcn, rng);
  auto x = random_matrix(4, 2, rng);
  x(0, 0) = std::nan("");
  EXPECT_THROW(loss_and_grads(model, g, x, "r0", {{0, 1}}, {{2, 3}}), DataError);
  EXPECT_THROW(loss_only(model, g, x, "r0", {{0, 1}}, {{2, 3}}), DataError);
  EXPECT_THROW(loss_only(model, g, random_matrix(4, 2, rng), "r0", {}, {{2, 3}}), UsageError);
}

TEST(Gradients, MatchCentralDifferencesForEveryLayerKind) {
  Rng rng(11);
  for (auto kind : {LayerKind::kRgcn, LayerKind::kSageMean, LayerKind::kSagePool}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto g = random_graph(6, 2, 8, rng);
      const auto model = random_model(4, {5, 3}, 2, kind, rng, {"r0", "r1"});
      const auto x = random_matrix(6, 4, rng);
      const auto pos = random_edges(6, 5, rng);
      const auto neg = random_edges(6, 5, rng);
      for (const std::string task : {"r0", "r1"}) {
        for (const auto& [name, err] : lkg::testing::gradient_check(model, g, x, task, pos, neg)) {
          EXPECT_LE(err, 1e-4) << to_string(kind) << " " << task << " " << name;
        }
      }
    }
  }
}

// ---- initialization, optimizer, training

TEST(GlorotInit, WithinBoundsAndSpread) {
  auto model = zero_model({30, {20, 10}, 1, {"cites"}, LayerKind::kRgcn});
  Rng rng(12);
  glorot_init(model, rng);
  model.for_each_param([](const std::string& name, const Matrix& m) {
    const bool diag = name.starts_with("diag.");
    const double a = std::sqrt(6.0 / (static_cast<double>(m.cols) + (diag ? m.cols : m.rows)));
    double lo = 0.0, hi = 0.0;
    for (double v : m.data) {
      EXPECT_LE(std::abs(v), a) << name;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_LT(lo, -0.5 * a) << name;
    EXPECT_GT(hi, 0.5 * a) << name;
  });
}

TEST(Optimizer, AdamDefaultsAndFirstStep) {
  EXPECT_EQ(Optimizer::kBeta1, 0.9);
  EXPECT_EQ(Optimizer::kBeta2, 0.999);
  EXPECT_EQ(Optimizer::kEps, 1e-8);
  EXPECT_EQ(TrainConfig{}.optimizer, OptimizerKind::kAdam);
  EXPECT_EQ(TrainConfig{}.learning_rate, 0.01);
  EXPECT_EQ(parse_optimizer("adaptive-moment"), OptimizerKind::kAdam);

  auto model = zero_model({2, {1}, 1, {"r"}, LayerKind::kRgcn});
  auto grads = model.zeros_like();
  grads.layers[0].w_self.data = {0.5, -2.0};
  Optimizer adam(OptimizerKind::kAdam, 0.1, model);
  adam.step(model, grads);
  // After one step the bias-corrected moments are g and g^2.
  EXPECT_NEAR(model.layers[0].w_self(0, 0), -0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(model.layers[0].w_self(0, 1), 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);

  auto m2 = zero_model({2, {1}, 1, {"r"}, LayerKind::kRgcn});
  Optimizer sgd(OptimizerKind::kSgd, 0.1, m2);
  sgd.step(m2, grads);
  EXPECT_NEAR(m2.layers[0].w_self(0, 1), 0.2, 1e-15);
}

TEST(TrainConfig, PaperEpochCountsAccepted) {
  for (std::size_t epochs : {1200u, 600u, 400u}) {
    const auto c = TrainConfig::from_json(nlohmann::json{{"epochs", epochs}, {"task", "similar_to"}});
    EXPECT_EQ(c.epochs, epochs);
    EXPECT_NO_THROW(c.validate());
  }
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = {};
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), UsageError);
  EXPECT_EQ(TrainConfig::from_json(TrainConfig{}.to_json()).to_json(), TrainConfig{}.to_json());
}

class PlantedTraining : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    SynthConfig sc;
    sc.n_docs = 120;
    sc.n_topics = 4;
    sc.seed = 3;
    auto [corpus, truth] = synth_corpus(sc);
    const auto mentions = annotate_corpus(corpus, default_lawpoints());
    graph_ = new CaseGraph(build_case_graph(corpus, mentions, lawpoint_feature_spec(), default_aliases()));
    x_ = new Matrix(normalize_features(graph_->features));
    split_ = new EdgeSplit(make_task_split(*graph_, "cites", 0.1, 1, 5));
  }
  static void TearDownTestSuite() {
    delete graph_;
    delete x_;
    delete split_;
  }
  static inline CaseGraph* graph_ = nullptr;
  static inline Matrix* x_ = nullptr;
  static inline EdgeSplit* split_ = nullptr;
};

TEST_F(PlantedTraining, DeterministicAndRecordsAucEvery50) {
  TrainConfig c;
  c.epochs = 120;
  c.seed = 9;
  const auto a = train(*x_, *split_, c);
  const auto b = train(*x_, *split_, c);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.model.layers[0].w_self, b.model.layers[0].w_self);
  ASSERT_EQ(a.report.losses.size(), 120u);
  ASSERT_EQ(a.report.aucs.size(), 3u);
  EXPECT_EQ(a.report.aucs[0].first, 50u);
  EXPECT_EQ(a.report.aucs[1].first, 100u);
  EXPECT_EQ(a.report.aucs[2].first, 120u);
  c.seed = 10;
  EXPECT_NE(train(*x_, *split_, c).report.losses, a.report.losses);
}

TEST_F(PlantedTraining, LossFallsInTrend) {
  for (auto opt : {OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    TrainConfig c;
    c.epochs = 200;
    c.seed = 1;
    c.optimizer = opt;
    if (opt == OptimizerKind::kSgd) c.learning_rate = 0.5;
    const auto r = train(*x_, *split_, c).report;
    const double first = std::accumulate(r.losses.begin(), r.losses.begin() + 10, 0.0) / 10.0;
    const double last = std::accumulate(r.losses.end() - 10, r.losses.end(), 0.0) / 10.0;
    EXPECT_LT(last, first) << to_string(opt);
  }
}

TEST_F(PlantedTraining, CheckpointRoundTrip) {
  TrainConfig c;
  c.epochs = 20;
  c.seed = 2;
  c.layer_kind = LayerKind::kSagePool;
  const auto t = train(*x_, *split_, c);
  TempDir dir("gnn");
  save_checkpoint(dir.file("m.bin"), {t.model, c, *split_, graph_->spec.names()});
  const auto ck = load_checkpoint(dir.file("m.bin"));
  EXPECT_EQ(ck.split, *split_);
  EXPECT_EQ(ck.config.to_json(), c.to_json());
  EXPECT_EQ(ck.feature_names, graph_->spec.names());
  std::vector<Matrix> a, b;
  t.model.for_each_param([&](const std::string&, const Matrix& m) { a.push_back(m); });
  ck.model.for_each_param([&](const std::string&, const Matrix& m) { b.push_back(m); });
  EXPECT_EQ(a, b);
  EXPECT_EQ(ck.model.layers[0].kind, LayerKind::kSagePool);
  const auto g = task_message_graph(graph_->size(), "cites", split_->train_pos);
  EXPECT_EQ(rgcn_forward(g, *x_, ck.model), rgcn_forward(g, *x_, t.model));
}

TEST(Train, RejectsEmptySplit) {
  EXPECT_THROW(train(Matrix(3, 2), EdgeSplit{}, TrainConfig{}), DataError);
}

TEST(Sigmoid, AgreesWithLogisticAndStaysInRange) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const double x = rng.uniform(-30.0, 30.0);
    const double want = 1.0 / (1.0 + std::exp(-x));
    EXPECT_NEAR(sigmoid(x), want, 1e-15 * std::max(1.0, want) + 1e-300);
    EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
  }
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_GT(sigmoid(-700.0), 0.0);
  EXPECT_EQ(sigmoid(800.0), 1.0);
}
