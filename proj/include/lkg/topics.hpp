#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "annotate.hpp"
#include "blob.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "porter.hpp"
#include "random.hpp"

namespace lkg {

/// A document reduced to its stem sequence.
struct StemmedDocument {
  std::string id;
  std::vector<std::string> stems;
};

using StemmedCorpus = std::vector<StemmedDocument>;

inline StemmedCorpus stem_corpus(const Corpus& corpus, const StopwordSet& stopwords) {
  StemmedCorpus out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) {
    StemmedDocument s{doc.id, {}};
    for (auto& t : tokenize(doc.body, stopwords)) s.stems.push_back(std::move(t.stem));
    out.push_back(std::move(s));
  }
  return out;
}

struct LdaConfig {
  std::size_t topics = 10;
  std::optional<double> alpha; // defaults to 50 / topics
  double beta = 0.01;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  std::size_t likelihood_every = 50;
};

struct TopicModel {
  std::size_t K = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<std::string> vocab;               // index -> stem, sorted
  std::vector<std::string> doc_ids;
  std::vector<std::vector<double>> phi;         // K x V
  std::vector<std::vector<double>> theta;       // D x K
  std::vector<std::vector<std::uint32_t>> assignments; // per document, per token
  std::vector<std::pair<std::size_t, double>> likelihood_trace; // (sweep, log-likelihood)

  std::size_t vocab_index(const std::string& stem) const {
    const auto it = std::lower_bound(vocab.begin(), vocab.end(), stem);
    if (it == vocab.end() || *it != stem) throw DataError("stem '" + stem + "' is not in the vocabulary");
    return static_cast<std::size_t>(it - vocab.begin());
  }

  /// Tokens assigned to each topic.
  std::vector<std::size_t> topic_token_counts() const {
    std::vector<std::size_t> counts(K, 0);
    for (const auto& doc : assignments) {
      for (const auto z : doc) ++counts[z];
    }
    return counts;
  }
};

namespace lda_detail {

class GibbsState {
public:
  GibbsState(const std::vector<std::vector<std::uint32_t>>& words, std::size_t K, std::size_t V,
             double alpha, double beta, Rng& rng)
      : words_(words), K_(K), V_(V), alpha_(alpha), beta_(beta),
        doc_topic_(words.size(), std::vector<std::uint32_t>(K, 0)),
        topic_word_(K, std::vector<std::uint32_t>(V, 0)), topic_total_(K, 0) {
    z_.resize(words.size());
    for (std::size_t d = 0; d < words.size(); ++d) {
      z_[d].resize(words[d].size());
      for (std::size_t n = 0; n < words[d].size(); ++n) {
        const auto k = static_cast<std::uint32_t>(rng.below(K));
        z_[d][n] = k;
        add(d, words[d][n], k);
      }
    }
    weights_.resize(K);
  }

  void sweep(Rng& rng) {
    const double v_beta = static_cast<double>(V_) * beta_;
    for (std::size_t d = 0; d < words_.size(); ++d) {
      for (std::size_t n = 0; n < words_[d].size(); ++n) {
        const auto w = words_[d][n];
        remove(d, w, z_[d][n]);
        double total = 0.0;
        for (std::size_t k = 0; k < K_; ++k) {
          total += (doc_topic_[d][k] + alpha_) * (topic_word_[k][w] + beta_) / (topic_total_[k] + v_beta);
          weights_[k] = total;
        }
        const double r = rng.uniform() * total;
        std::size_t k = 0;
        while (k + 1 < K_ && weights_[k] <= r) ++k;
        z_[d][n] = static_cast<std::uint32_t>(k);
        add(d, w, static_cast<std::uint32_t>(k));
      }
    }
  }

  /// Topic-word counts summed over words equal the topic totals.
  bool counts_consistent() const {
    for (std::size_t k = 0; k < K_; ++k) {
      std::uint64_t s = 0;
      for (const auto c : topic_word_[k]) s += c;
      if (s != topic_total_[k]) return false;
    }
    return true;
  }

  std::vector<std::vector<double>> phi() const {
    std::vector<std::vector<double>> out(K_, std::vector<double>(V_));
    const double v_beta = static_cast<double>(V_) * beta_;
    for (std::size_t k = 0; k < K_; ++k) {
      for (std::size_t w = 0; w < V_; ++w) {
        out[k][w] = (topic_word_[k][w] + beta_) / (topic_total_[k] + v_beta);
      }
    }
    return out;
  }

  std::vector<std::vector<double>> theta() const {
    std::vector<std::vector<double>> out(words_.size(), std::vector<double>(K_));
    const double k_alpha = static_cast<double>(K_) * alpha_;
    for (std::size_t d = 0; d < words_.size(); ++d) {
      const double len = static_cast<double>(words_[d].size());
      for (std::size_t k = 0; k < K_; ++k) out[d][k] = (doc_topic_[d][k] + alpha_) / (len + k_alpha);
    }
    return out;
  }

  /// Sum over tokens of log sum_k theta_dk phi_kw under the current point estimates.
  double log_likelihood() const {
    const auto ph = phi();
    const auto th = theta();
    double ll = 0.0;
    for (std::size_t d = 0; d < words_.size(); ++d) {
      for (const auto w : words_[d]) {
        double p = 0.0;
        for (std::size_t k = 0; k < K_; ++k) p += th[d][k] * ph[k][w];
        ll += std::log(p);
      }
    }
    return ll;
  }

  const std::vector<std::vector<std::uint32_t>>& assignments() const { return z_; }

private:
  void add(std::size_t d, std::uint32_t w, std::uint32_t k) {
    ++doc_topic_[d][k];
    ++topic_word_[k][w];
    ++topic_total_[k];
  }
  void remove(std::size_t d, std::uint32_t w, std::uint32_t k) {
    --doc_topic_[d][k];
    --topic_word_[k][w];
    --topic_total_[k];
  }

  const std::vector<std::vector<std::uint32_t>>& words_;
  std::size_t K_, V_;
  double alpha_, beta_;
  std::vector<std::vector<std::uint32_t>> doc_topic_;
  std::vector<std::vector<std::uint32_t>> topic_word_;
  std::vector<std::uint64_t> topic_total_;
  std::vector<std::vector<std::uint32_t>> z_;
  std::vector<double> weights_;
};

} // namespace lda_detail

/// Collapsed Gibbs sampling for `iterations` full sweeps over every token.
/// phi and theta are the smoothed point estimates from the final counts.
inline TopicModel fit_lda(const StemmedCorpus& corpus, const LdaConfig& config) {
  if (config.topics < 1) throw UsageError("fit_lda: topic count must be at least 1");
  if (config.iterations < 1) throw UsageError("fit_lda: iterations must be at least 1");
  const double alpha = config.alpha.value_or(50.0 / static_cast<double>(config.topics));
  if (!(alpha > 0.0) || !(config.beta > 0.0)) throw UsageError("fit_lda: alpha and beta must be positive");

  TopicModel model;
  model.K = config.topics;
  model.alpha = alpha;
  model.beta = config.beta;
  for (const auto& doc : corpus) {
    model.doc_ids.push_back(doc.id);
    model.vocab.insert(model.vocab.end(), doc.stems.begin(), doc.stems.end());
  }
  std::sort(model.vocab.begin(), model.vocab.end());
  model.vocab.erase(std::unique(model.vocab.begin(), model.vocab.end()), model.vocab.end());
  if (model.vocab.empty()) throw DataError("fit_lda: corpus has an empty vocabulary");

  std::vector<std::vector<std::uint32_t>> words(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const auto& s : corpus[d].stems) words[d].push_back(static_cast<std::uint32_t>(model.vocab_index(s)));
  }

  Rng rng(config.seed);
  lda_detail::GibbsState state(words, model.K, model.vocab.size(), alpha, config.beta, rng);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    state.sweep(rng);
#ifndef NDEBUG
    if (!state.counts_consistent()) throw std::logic_error("fit_lda: Gibbs count matrices diverged");
#endif
    if (config.likelihood_every > 0 && it % config.likelihood_every == 0) {
      model.likelihood_trace.emplace_back(it, state.log_likelihood());
    }
  }
  model.phi = state.phi();
  model.theta = state.theta();
  model.assignments = state.assignments();
  return model;
}

struct TopicSummary {
  std::size_t topic = 0;
  std::string top_stem;
  double occurrence_percent = 0.0; // share of token assignments
  std::vector<std::string> top_words;
};

/// Top `n` stems of topic `k` by phi, ties broken by stem order.
inline std::vector<std::string> top_words(const TopicModel& model, std::size_t k, std::size_t n) {
  std::vector<std::size_t> idx(model.vocab.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto& row = model.phi[k];
  const std::size_t take = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(model.vocab[idx[i]]);
  return out;
}

/// Topics ranked by corpus-wide assignment share (`counts` = tokens per topic);
/// `top_n` = 0 reports all of them.
inline std::vector<TopicSummary> topic_report(const TopicModel& model,
                                              const std::vector<std::size_t>& counts,
                                              std::size_t top_n, std::size_t words_per_topic = 10) {
  if (counts.size() != model.K) throw UsageError("topic_report: one count per topic required");
  std::size_t total = 0;
  for (const auto c : counts) total += c;
  std::vector<TopicSummary> out;
  for (std::size_t k = 0; k < model.K; ++k) {
    TopicSummary s;
    s.topic = k;
    s.top_words = top_words(model, k, words_per_topic);
    s.top_stem = s.top_words.empty() ? std::string() : s.top_words.front();
    s.occurrence_percent = total == 0 ? 0.0 : 100.0 * static_cast<double>(counts[k]) / static_cast<double>(total);
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [&](const TopicSummary& a, const TopicSummary& b) {
    return counts[a.topic] > counts[b.topic];
  });
  if (top_n > 0 && out.size() > top_n) out.resize(top_n);
  return out;
}

inline std::vector<TopicSummary> topic_report(const TopicModel& model, std::size_t top_n,
                                              std::size_t words_per_topic = 10) {
  return topic_report(model, model.topic_token_counts(), top_n, words_per_topic);
}

inline nlohmann::ordered_json to_json(const TopicSummary& s) {
  nlohmann::ordered_json j;
  j["topic"] = s.topic;
  j["top_stem"] = s.top_stem;
  j["occurrence_percent"] = s.occurrence_percent;
  j["top_words"] = s.top_words;
  return j;
}

struct FeatureSuggestion {
  std::string topic_stem;
  std::optional<std::string> ontology_concept;
};

/// Pairs each topic's top stem with an ontology node type: exact match against the
/// stemmed type name first, then a type name that starts with the stem.
inline std::vector<FeatureSuggestion> suggest_features(const std::vector<TopicSummary>& report,
                                                       const Ontology& ontology) {
  const PorterStemmer stem;
  std::vector<FeatureSuggestion> out;
  for (const auto& s : report) {
    FeatureSuggestion f{s.top_stem, std::nullopt};
    if (!s.top_stem.empty()) {
      for (const auto& type : ontology.node_types()) {
        if (stem(type) == s.top_stem) {
          f.ontology_concept = type;
          break;
        }
      }
      if (!f.ontology_concept) {
        for (const auto& type : ontology.node_types()) {
          if (type.starts_with(s.top_stem)) {
            f.ontology_concept = type;
            break;
          }
        }
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

// ---------------------------------------------------------------------------
// TF-IDF

struct TfIdfIndex {
  std::vector<std::string> doc_ids;
  std::vector<std::map<std::string, double>> scores; // per document, stems present in it
  std::map<std::string, double> idf;

  double score(std::size_t doc, const std::string& stem) const {
    const auto it = scores.at(doc).find(stem);
    return it == scores[doc].end() ? 0.0 : it->second;
  }
};

/// tf = count / document length, idf = ln(D / df), score = tf * idf.
inline TfIdfIndex tfidf(const StemmedCorpus& corpus) {
  if (corpus.empty()) throw UsageError("tfidf: corpus is empty");
  TfIdfIndex index;
  std::map<std::string, std::size_t> df;
  std::vector<std::map<std::string, std::size_t>> counts(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    index.doc_ids.push_back(corpus[d].id);
    for (const auto& s : corpus[d].stems) ++counts[d][s];
    for (const auto& [s, c] : counts[d]) ++df[s];
  }
  const double D = static_cast<double>(corpus.size());
  for (const auto& [s, n] : df) index.idf[s] = std::log(D / static_cast<double>(n));
  index.scores.resize(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const double len = static_cast<double>(corpus[d].stems.size());
    for (const auto& [s, c] : counts[d]) index.scores[d][s] = static_cast<double>(c) / len * index.idf[s];
  }
  return index;
}

// ---------------------------------------------------------------------------
// Checkpoint: manifest {K, alpha, beta, vocab, doc_ids}, blocks phi (K x V), theta (D x K).

inline void save_topic_model(const std::string& path, const TopicModel& model) {
  nlohmann::ordered_json manifest;
  manifest["kind"] = "lda";
  manifest["K"] = model.K;
  manifest["alpha"] = model.alpha;
  manifest["beta"] = model.beta;
  manifest["vocab"] = model.vocab;
  manifest["doc_ids"] = model.doc_ids;
  manifest["topic_token_counts"] = model.topic_token_counts();
  std::vector<double> phi, theta;
  for (const auto& r : model.phi) phi.insert(phi.end(), r.begin(), r.end());
  for (const auto& r : model.theta) theta.insert(theta.end(), r.begin(), r.end());
  write_blob(path, manifest,
             {{"phi", model.K, model.vocab.size(), phi}, {"theta", model.doc_ids.size(), model.K, theta}});
}

/// Restores everything but the per-token assignments; topic shares come from the
/// manifest's recorded counts.
struct LoadedTopicModel {
  TopicModel model;
  std::vector<std::size_t> topic_token_counts;
};

inline LoadedTopicModel load_topic_model(const std::string& path) {
  const auto blob = read_blob(path);
  LoadedTopicModel out;
  auto& m = out.model;
  try {
    m.K = blob.manifest.at("K").get<std::size_t>();
    m.alpha = blob.manifest.at("alpha").get<double>();
    m.beta = blob.manifest.at("beta").get<double>();
    m.vocab = blob.manifest.at("vocab").get<std::vector<std::string>>();
    m.doc_ids = blob.manifest.at("doc_ids").get<std::vector<std::string>>();
    out.topic_token_counts = blob.manifest.at("topic_token_counts").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("topic model '" + path + "': " + e.what());
  }
  const auto& phi = blob.block("phi");
  const auto& theta = blob.block("theta");
  const std::size_t V = m.vocab.size(), D = m.doc_ids.size();
  if (phi.size() != m.K * V || theta.size() != D * m.K) throw DataError("topic model '" + path + "': block sizes disagree with manifest");
  m.phi.assign(m.K, std::vector<double>(V));
  for (std::size_t k = 0; k < m.K; ++k) std::copy_n(phi.begin() + static_cast<std::ptrdiff_t>(k * V), V, m.phi[k].begin());
  m.theta.assign(D, std::vector<double>(m.K));
  for (std::size_t d = 0; d < D; ++d) std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(d * m.K), m.K, m.theta[d].begin());
  return out;
}

} // namespace lkg
