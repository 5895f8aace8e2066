#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "annotate.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "porter.hpp"
#include "random.hpp"

namespace lkg {

struct SynthConfig {
  std::size_t n_docs = 200;
  std::size_t n_topics = 3;
  std::size_t vocab_size = 300;
  std::size_t doc_length = 120;        // mean body words drawn from the topic mixture
  double citation_density = 0.05;      // base probability of a citation between two documents
  double feature_link_correlation = 0.9;
  std::uint64_t seed = 7;

  void validate() const {
    if (n_docs < 1 || n_topics < 1 || vocab_size < 1 || doc_length < 1) {
      throw UsageError("synth: all counts must be at least 1");
    }
    if (!(citation_density >= 0.0 && citation_density <= 1.0)) {
      throw UsageError("synth: citation_density must lie in [0, 1]");
    }
    if (!(feature_link_correlation >= 0.0 && feature_link_correlation <= 1.0)) {
      throw UsageError("synth: feature_link_correlation must lie in [0, 1]");
    }
  }
};

/// What the generator planted, for checking learners against.
struct PlantedTruth {
  std::vector<std::string> vocab;
  std::vector<std::vector<double>> phi;       // n_topics x vocab_size, rows sum to 1
  std::vector<std::size_t> dominant_topic;    // per document, corpus order
  std::vector<std::string> topic_concepts;    // lawpoint concept planted with each topic
  std::vector<std::pair<std::string, std::string>> cites;      // (citing, cited)
  std::vector<std::pair<std::string, std::string>> similar_to; // (lower id, higher id)
};

inline nlohmann::ordered_json to_json(const PlantedTruth& t) {
  nlohmann::ordered_json j;
  j["vocab"] = t.vocab;
  j["phi"] = t.phi;
  j["dominant_topic"] = t.dominant_topic;
  j["topic_concepts"] = t.topic_concepts;
  j["cites"] = t.cites;
  j["similar_to"] = t.similar_to;
  return j;
}

namespace synth_detail {

// Slope of the logit shift applied to same-topic / cross-topic pairs at correlation 1.
inline constexpr double kLinkSlope = 4.0;

inline double logit(double p) {
  const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(q / (1.0 - q));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double link_probability(double density, double correlation, bool shared) {
  if (density <= 0.0) return 0.0;
  if (density >= 1.0) return 1.0;
  return sigmoid(logit(density) + kLinkSlope * correlation * (shared ? 1.0 : -1.0));
}

/// Pronounceable pseudo-words that are Porter fixed points and collide with
/// neither stopwords nor lawpoint vocabulary.
inline std::vector<std::string> pseudo_vocabulary(std::size_t n, Rng& rng,
                                                  const std::unordered_set<std::string>& reserved) {
  static constexpr std::string_view kOnsets = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aiou";
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  const PorterStemmer stem;
  const auto stop = default_stopwords();
  while (out.size() < n) {
    const std::size_t syllables = 2 + rng.below(2);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
      w.push_back(kOnsets[rng.below(kOnsets.size())]);
      w.push_back(kVowels[rng.below(kVowels.size())]);
    }
    if (rng.bernoulli(0.5)) w.push_back(kOnsets[rng.below(kOnsets.size())]);
    if (stem(w) != w || stop.contains(w) || reserved.contains(w) || !seen.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

inline const std::vector<std::string>& court_surfaces() {
  static const std::vector<std::string> v = {
      "Supreme Court of India", "Delhi High Court",  "Bombay High Court",
      "Mumbai High Court",      "Madras High Court", "Chennai High Court",
      "Calcutta High Court",    "Kolkata High Court", "Intellectual Property Appellate Board"};
  return v;
}

inline const std::vector<std::string>& jurisdictions() {
  static const std::vector<std::string> v = {"Civil", "Commercial", "Criminal", "Appellate",
                                             "Constitutional"};
  return v;
}

inline const std::vector<std::string>& acts() {
  static const std::vector<std::string> v = {
      "Copyright Act, 1957", "Patents Act, 1970",          "Trade Marks Act, 1999",
      "Designs Act, 2000",   "Code of Civil Procedure, 1908", "Commercial Courts Act, 2015",
      "Information Technology Act, 2000"};
  return v;
}

inline std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 32);
  return w;
}

inline std::string join_names(const std::vector<std::string>& pool, std::size_t k, Rng& rng) {
  std::string out;
  std::set<std::size_t> used;
  while (used.size() < std::min(k, pool.size())) used.insert(rng.below(pool.size()));
  for (const auto idx : used) {
    if (!out.empty()) out += "; ";
    out += pool[idx];
  }
  return out;
}

} // namespace synth_detail

/// Generates a corpus from planted topics. Documents sharing a dominant topic also
/// share a dominant lawpoint concept, and link (cite / similar_to) with a probability
/// whose logit moves by +/- 4 * feature_link_correlation around the base density.
inline std::pair<Corpus, PlantedTruth> synth_corpus(const SynthConfig& config,
                                                    const LawpointDictionary& dict = default_lawpoints()) {
  using namespace synth_detail;
  config.validate();
  Rng rng(config.seed);
  PlantedTruth truth;

  std::unordered_set<std::string> reserved;
  for (const auto& e : dict.entries()) reserved.insert(e.words.begin(), e.words.end());
  truth.vocab = pseudo_vocabulary(config.vocab_size, rng, reserved);

  const std::size_t K = config.n_topics;
  for (std::size_t k = 0; k < K; ++k) truth.phi.push_back(rng.dirichlet(config.vocab_size, 0.1));
  const auto concepts = dict.concept_labels();
  for (std::size_t k = 0; k < K; ++k) truth.topic_concepts.push_back(concepts[k % concepts.size()]);

  // Name pools built from the pseudo-vocabulary so metadata stays topic-neutral.
  auto name_pool = [&](std::size_t n, const std::string& prefix, const std::string& suffix) {
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < n; ++i) {
      pool.push_back(prefix + capitalize(truth.vocab[rng.below(truth.vocab.size())]) +
                     capitalize(truth.vocab[rng.below(truth.vocab.size())]).substr(0, 3) + suffix);
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    return pool;
  };
  const auto judges = name_pool(30, "Justice ", "");
  const auto companies = name_pool(60, "", " Ltd");

  const std::size_t width = std::max<std::size_t>(4, std::to_string(config.n_docs).size());
  Corpus corpus;
  corpus.reserve(config.n_docs);
  for (std::size_t d = 0; d < config.n_docs; ++d) {
    Document doc;
    std::string num = std::to_string(d + 1);
    doc.id = "syn-" + std::string(width - num.size(), '0') + num;
    const std::size_t topic = rng.below(K);
    truth.dominant_topic.push_back(topic);

    std::vector<double> theta = rng.dirichlet(K, 1.0);
    for (auto& t : theta) t *= 0.2;
    theta[topic] += 0.8;

    const std::size_t length = std::max<std::size_t>(10, rng.poisson(static_cast<double>(config.doc_length)));
    std::vector<std::string> words;
    words.reserve(length + 16);
    for (std::size_t n = 0; n < length; ++n) {
      const auto z = rng.categorical(theta);
      words.push_back(truth.vocab[rng.categorical(truth.phi[z])]);
    }
    // Lawpoint phrases: several of the topic's concept, occasional noise concepts.
    std::vector<std::string> phrases;
    const auto& own = dict.concepts().at(truth.topic_concepts[topic]);
    const std::size_t own_count = 1 + rng.poisson(2.0);
    for (std::size_t i = 0; i < own_count; ++i) phrases.push_back(text::normalize(own[rng.below(own.size())]));
    for (const auto& [label, list] : dict.concepts()) {
      if (label == truth.topic_concepts[topic]) continue;
      if (rng.bernoulli(0.1)) phrases.push_back(text::normalize(list[rng.below(list.size())]));
    }
    // Each phrase goes after a distinct body word, so phrases never abut each other.
    std::vector<std::vector<std::string>> after(words.size());
    for (auto& p : phrases) after[rng.below(words.size())].push_back(std::move(p));

    std::string body;
    std::size_t in_sentence = 0;
    std::size_t sentence_len = 8 + rng.below(7);
    for (std::size_t n = 0; n < words.size(); ++n) {
      if (!body.empty()) body += ' ';
      body += in_sentence == 0 ? capitalize(words[n]) : words[n];
      for (const auto& p : after[n]) {
        body += ' ';
        body += p;
        body += ' ';
        body += truth.vocab[rng.below(truth.vocab.size())];
      }
      if (++in_sentence == sentence_len || n + 1 == words.size()) {
        body += '.';
        in_sentence = 0;
        sentence_len = 8 + rng.below(7);
      }
    }
    doc.body = std::move(body);

    const auto& courts = court_surfaces();
    doc.court = courts[rng.below(courts.size())];
    doc.doc_type = rng.bernoulli(0.6) ? DocType::kCase : DocType::kJudgment;
    const int year = 1980 + static_cast<int>(rng.below(41));
    const int month = 1 + static_cast<int>(rng.below(12));
    const int day = 1 + static_cast<int>(rng.below(28));
    char date[40];
    std::snprintf(date, sizeof date, "%04d-%02d-%02d", year, month, day);
    doc.date = date;
    const std::string plaintiff = join_names(companies, 1 + rng.below(2), rng);
    const std::string defendant = join_names(companies, 1 + rng.below(2), rng);
    doc.title = text::split(plaintiff, ';').front() + " v. " + text::split(defendant, ';').front();
    doc.metadata[std::string(meta::kJudges)] = join_names(judges, 1 + rng.below(3), rng);
    doc.metadata[std::string(meta::kPlaintiffs)] = plaintiff;
    doc.metadata[std::string(meta::kDefendants)] = defendant;
    if (const auto n = rng.below(2); n > 0) {
      doc.metadata[std::string(meta::kAppellants)] = join_names(companies, n, rng);
    }
    doc.metadata[std::string(meta::kJurisdiction)] = jurisdictions()[rng.below(jurisdictions().size())];
    {
      std::vector<std::string> secs;
      for (std::size_t i = 0, n = rng.below(5); i < n; ++i) secs.push_back("Section " + std::to_string(1 + rng.below(160)));
      std::string joined;
      for (const auto& s : secs) joined += (joined.empty() ? "" : "; ") + s;
      if (!joined.empty()) doc.metadata[std::string(meta::kSections)] = joined;
    }
    if (const auto n = rng.below(3); n > 0) doc.metadata[std::string(meta::kActs)] = join_names(acts(), n, rng);
    corpus.push_back(std::move(doc));
  }

  // Citations point strictly back in time (ties broken by corpus position).
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return corpus[a].date < corpus[b].date; });
  for (std::size_t a = 0; a < order.size(); ++a) {
    const auto citing = order[a];
    for (std::size_t b = 0; b < a; ++b) {
      const auto cited = order[b];
      const bool shared = truth.dominant_topic[citing] == truth.dominant_topic[cited];
      if (rng.bernoulli(link_probability(config.citation_density, config.feature_link_correlation, shared))) {
        corpus[citing].citations.push_back(corpus[cited].id);
      }
    }
  }
  for (auto& doc : corpus) {
    std::sort(doc.citations.begin(), doc.citations.end());
    for (const auto& c : doc.citations) truth.cites.emplace_back(doc.id, c);
  }

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::string joined;
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      const bool shared = truth.dominant_topic[i] == truth.dominant_topic[j];
      if (rng.bernoulli(link_probability(config.citation_density / 2.0, config.feature_link_correlation, shared))) {
        joined += (joined.empty() ? "" : "; ") + corpus[j].id;
        truth.similar_to.emplace_back(corpus[i].id, corpus[j].id);
      }
    }
    if (!joined.empty()) corpus[i].metadata[std::string(meta::kSimilarTo)] = joined;
  }
  return {std::move(corpus), std::move(truth)};
}

} // namespace lkg
