#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "support.hpp"

using namespace lkg;
using lkg::testing::data_path;
using lkg::testing::TempDir;

namespace {

StemmedCorpus stems(std::initializer_list<std::pair<std::string, std::vector<std::string>>> docs) {
  StemmedCorpus out;
  for (const auto& [id, s] : docs) out.push_back({id, s});
  return out;
}

StemmedCorpus planted_corpus(std::size_t n_topics, std::uint64_t seed, PlantedTruth* truth_out = nullptr) {
  SynthConfig c;
  c.n_docs = 200;
  c.n_topics = n_topics;
  c.seed = seed;
  auto [corpus, truth] = synth_corpus(c);
  if (truth_out) *truth_out = std::move(truth);
  return stem_corpus(corpus, default_stopwords());
}

} // namespace

TEST(FitLda, SingleTopicIsSmoothedFrequencies) {
  const auto corpus = stems({{"a", {"x", "y", "x"}}, {"b", {"z"}}, {"c", {}}});
  LdaConfig cfg;
  cfg.topics = 1;
  cfg.iterations = 5;
  cfg.beta = 0.5;
  const auto m = fit_lda(corpus, cfg);
  for (const auto& row : m.theta) {
    ASSERT_EQ(row.size(), 1u);
    EXPECT_EQ(row[0], 1.0);
  }
  const std::map<std::string, double> counts = {{"x", 2}, {"y", 1}, {"z", 1}};
  ASSERT_EQ(m.vocab.size(), 3u);
  for (std::size_t w = 0; w < 3; ++w) {
    EXPECT_NEAR(m.phi[0][w], (counts.at(m.vocab[w]) + 0.5) / (4 + 3 * 0.5), 1e-15);
  }
}

TEST(FitLda, RowsAreDistributionsAndAssignmentsInRange) {
  const auto corpus = planted_corpus(3, 5);
  LdaConfig cfg;
  cfg.topics = 4;
  cfg.iterations = 30;
  const auto m = fit_lda(corpus, cfg);
  for (const auto& row : m.phi) {
    double s = 0.0;
    for (double p : row) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  ASSERT_EQ(m.theta.size(), corpus.size());
  for (const auto& row : m.theta) {
    double s = 0.0;
    for (double p : row) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    ASSERT_EQ(m.assignments[d].size(), corpus[d].stems.size());
    for (auto z : m.assignments[d]) EXPECT_LT(z, 4u);
  }
  EXPECT_DOUBLE_EQ(m.alpha, 50.0 / 4.0);
}

TEST(FitLda, SameSeedSameAssignments) {
  const auto corpus = planted_corpus(3, 9);
  LdaConfig cfg;
  cfg.topics = 3;
  cfg.iterations = 20;
  cfg.seed = 4;
  const auto a = fit_lda(corpus, cfg);
  const auto b = fit_lda(corpus, cfg);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.phi, b.phi);
  cfg.seed = 5;
  EXPECT_NE(fit_lda(corpus, cfg).assignments, a.assignments);
}

TEST(FitLda, CountsStayConsistentEverySweep) {
  const std::vector<std::vector<std::uint32_t>> words = {{0, 1, 2, 2}, {3, 3, 1}, {}, {4, 0}};
  Rng rng(1);
  lda_detail::GibbsState state(words, 3, 5, 0.5, 0.1, rng);
  for (int i = 0; i < 200; ++i) {
    state.sweep(rng);
    ASSERT_TRUE(state.counts_consistent());
  }
}

TEST(FitLda, RecoversPlantedTopics) {
  PlantedTruth truth;
  const auto corpus = planted_corpus(3, 7, &truth);
  LdaConfig cfg;
  cfg.topics = 3;
  cfg.iterations = 200;
  cfg.seed = 11;
  const auto m = fit_lda(corpus, cfg);
  EXPECT_GE(lkg::testing::planted_topic_overlap(truth, m), 0.6);
}

TEST(FitLda, LikelihoodAtFinalSweepNotBelowSweep50) {
  const auto corpus = planted_corpus(3, 7);
  LdaConfig cfg;
  cfg.topics = 3;
  cfg.iterations = 300;
  cfg.seed = 11;
  const auto m = fit_lda(corpus, cfg);
  ASSERT_EQ(m.likelihood_trace.size(), 6u);
  EXPECT_EQ(m.likelihood_trace.front().first, 50u);
  EXPECT_GE(m.likelihood_trace.back().second, m.likelihood_trace.front().second);
}

TEST(FitLda, Errors) {
  LdaConfig cfg;
  EXPECT_THROW(fit_lda(stems({{"a", {}}}), cfg), DataError);
  cfg.topics = 0;
  EXPECT_THROW(fit_lda(stems({{"a", {"x"}}}), cfg), UsageError);
}

TEST(TopicModelFile, RoundTrip) {
  const auto corpus = planted_corpus(3, 7);
  LdaConfig cfg;
  cfg.topics = 3;
  cfg.iterations = 10;
  const auto m = fit_lda(corpus, cfg);
  TempDir dir("topics");
  save_topic_model(dir.file("lda.bin"), m);
  const auto loaded = load_topic_model(dir.file("lda.bin"));
  EXPECT_EQ(loaded.model.phi, m.phi);
  EXPECT_EQ(loaded.model.theta, m.theta);
  EXPECT_EQ(loaded.model.vocab, m.vocab);
  EXPECT_EQ(loaded.topic_token_counts, m.topic_token_counts());
}

// ---- topic_report

TEST(TopicReport, SingleTopicIsEverything) {
  LdaConfig cfg;
  cfg.topics = 1;
  cfg.iterations = 2;
  const auto m = fit_lda(stems({{"a", {"court", "court", "patent"}}}), cfg);
  const auto r = topic_report(m, 0);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r[0].occurrence_percent, 100.0);
  EXPECT_EQ(r[0].top_stem, "court");
}

TEST(TopicReport, SharesSumToHundredAndAreRanked) {
  const auto corpus = planted_corpus(3, 13);
  for (std::size_t K : {2u, 5u, 8u}) {
    LdaConfig cfg;
    cfg.topics = K;
    cfg.iterations = 15;
    const auto m = fit_lda(corpus, cfg);
    const auto r = topic_report(m, 0);
    ASSERT_EQ(r.size(), K);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      s += r[i].occurrence_percent;
      if (i > 0) {
        EXPECT_GE(r[i - 1].occurrence_percent, r[i].occurrence_percent);
      }
    }
    EXPECT_NEAR(s, 100.0, 0.01);
    EXPECT_EQ(topic_report(m, 1).size(), 1u);
  }
}

// ---- tfidf

TEST(TfIdf, HandComputed) {
  const auto idx = tfidf(stems({{"d1", {"patent", "patent", "court"}}, {"d2", {"court"}}}));
  EXPECT_NEAR(idx.score(0, "patent"), 2.0 / 3.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(idx.score(0, "patent"), 0.4621, 5e-5);
  EXPECT_EQ(idx.score(0, "court"), 0.0);
  EXPECT_EQ(idx.score(1, "court"), 0.0);
  EXPECT_EQ(idx.idf.at("court"), 0.0);
}

TEST(TfIdf, EmptyDocumentScoresZero) {
  const auto idx = tfidf(stems({{"d1", {"a", "b"}}, {"d2", {}}}));
  EXPECT_TRUE(idx.scores[1].empty());
  EXPECT_EQ(idx.score(1, "a"), 0.0);
}

TEST(TfIdf, ZeroExactlyWhenAbsentOrUbiquitous) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    StemmedCorpus corpus;
    const auto D = 1 + rng.below(6);
    for (std::size_t d = 0; d < D; ++d) {
      StemmedDocument doc{"d" + std::to_string(d), {}};
      for (std::size_t n = rng.below(8); n > 0; --n) doc.stems.push_back(std::string(1, static_cast<char>('a' + rng.below(5))));
      corpus.push_back(doc);
    }
    const auto idx = tfidf(corpus);
    for (std::size_t d = 0; d < D; ++d) {
      for (char c = 'a'; c < 'f'; ++c) {
        const std::string s(1, c);
        const auto tf = std::count(corpus[d].stems.begin(), corpus[d].stems.end(), s);
        std::size_t df = 0;
        for (const auto& doc : corpus) df += std::find(doc.stems.begin(), doc.stems.end(), s) != doc.stems.end();
        const double score = idx.score(d, s);
        EXPECT_GE(score, 0.0);
        EXPECT_EQ(score == 0.0, tf == 0 || df == D);
      }
    }
  }
}

// ---- suggest_features

TEST(SuggestFeatures, MatchesOntologyTypes) {
  const auto ontology = Ontology::load(data_path("ontology.json"));
  std::vector<TopicSummary> report(3);
  report[0].top_stem = "plaintiff";
  report[1].top_stem = "right";
  report[2].top_stem = porter_stem("judgement");
  const auto s = suggest_features(report, ontology);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].ontology_concept, "plaintiff");
  EXPECT_FALSE(s[1].ontology_concept.has_value());
  EXPECT_EQ(s[2].ontology_concept, "judgement");
  EXPECT_TRUE(suggest_features({}, ontology).empty());
}
