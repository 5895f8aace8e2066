#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "text.hpp"

namespace lkg {

namespace detail {

inline nlohmann::json read_json_file(const std::string& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + std::string(what) + " file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed " + std::string(what) + " file '" + path + "': " + e.what());
  }
}

/// Lowercases and collapses each whitespace run to one space, without trimming.
inline std::string normalize_separator(std::string_view sep) {
  std::string out;
  bool in_space = false;
  for (std::size_t i = 0; i < sep.size();) {
    const auto c = text::decode_utf8(sep, i);
    if (text::is_space(c.value)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      in_space = false;
      out += text::lower(sep.substr(i, c.length));
    }
    i += c.length;
  }
  return out;
}

/// Words of a text plus the normalized separators between consecutive words.
struct WordSequence {
  std::vector<std::string> words;
  std::vector<std::string> separators; // separators[i] sits between words[i] and words[i+1]
  std::vector<std::pair<std::size_t, std::size_t>> spans;
};

inline WordSequence word_sequence(std::string_view s) {
  WordSequence seq;
  seq.spans = word_spans(s);
  for (std::size_t i = 0; i < seq.spans.size(); ++i) {
    const auto [b, e] = seq.spans[i];
    seq.words.push_back(text::lower(s.substr(b, e - b)));
    if (i + 1 < seq.spans.size()) {
      seq.separators.push_back(normalize_separator(s.substr(e, seq.spans[i + 1].first - e)));
    }
  }
  return seq;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Lawpoint gazetteer

class LawpointDictionary {
public:
  LawpointDictionary() = default;

  /// Validates and normalizes. Throws DataError on an empty concept, an empty or
  /// malformed phrase, or a phrase listed under two concepts.
  explicit LawpointDictionary(std::map<std::string, std::vector<std::string>> concepts) {
    for (auto& [concept_label, phrases] : concepts) {
      if (concept_label.empty()) throw DataError("lawpoint dictionary has an empty concept label");
      if (phrases.empty()) {
        throw DataError("lawpoint concept '" + concept_label + "' has no phrases");
      }
      for (auto& raw : phrases) {
        Entry entry;
        entry.phrase = text::normalize(raw);
        if (entry.phrase.empty()) {
          throw DataError("lawpoint concept '" + concept_label + "' has an empty phrase");
        }
        const auto seq = detail::word_sequence(entry.phrase);
        if (seq.words.empty() || seq.spans.front().first != 0 ||
            seq.spans.back().second != entry.phrase.size()) {
          throw DataError("lawpoint phrase '" + raw + "' must start and end with a letter or digit");
        }
        entry.words = seq.words;
        entry.separators = seq.separators;
        entry.concept_label = concept_label;
        const auto [it, inserted] = owner_.emplace(entry.phrase, concept_label);
        if (!inserted) {
          throw DataError("lawpoint phrase '" + entry.phrase + "' is listed under both '" +
                          it->second + "' and '" + concept_label + "'");
        }
        by_first_word_[entry.words.front()].push_back(entries_.size());
        entries_.push_back(std::move(entry));
      }
      concepts_[concept_label] = phrases;
    }
    for (auto& [word, ids] : by_first_word_) {
      std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        return entries_[a].words.size() > entries_[b].words.size();
      });
    }
  }

  static LawpointDictionary from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("lawpoint dictionary must be a JSON object");
    std::map<std::string, std::vector<std::string>> concepts;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_array()) throw DataError("lawpoint concept '" + k + "' must map to an array");
      for (const auto& p : v) {
        if (!p.is_string()) throw DataError("lawpoint phrases must be strings");
        concepts[k].push_back(p.get<std::string>());
      }
      if (v.empty()) concepts[k];
    }
    return LawpointDictionary(std::move(concepts));
  }

  static LawpointDictionary load(const std::string& path) {
    return from_json(detail::read_json_file(path, "lawpoint dictionary"));
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [c, phrases] : concepts_) j[c] = phrases;
    return j;
  }

  std::vector<std::string> concept_labels() const {
    std::vector<std::string> out;
    for (const auto& [c, p] : concepts_) out.push_back(c);
    return out;
  }

  const std::map<std::string, std::vector<std::string>>& concepts() const { return concepts_; }

  std::optional<std::string> concept_of(std::string_view phrase) const {
    const auto it = owner_.find(text::normalize(phrase));
    if (it == owner_.end()) return std::nullopt;
    return it->second;
  }

  struct Entry {
    std::string phrase;
    std::string concept_label;
    std::vector<std::string> words;
    std::vector<std::string> separators;
  };

  const std::vector<Entry>& entries() const { return entries_; }

  /// Candidate entries whose first word is `word`, longest first.
  const std::vector<std::size_t>* candidates(const std::string& word) const {
    const auto it = by_first_word_.find(word);
    return it == by_first_word_.end() ? nullptr : &it->second;
  }

private:
  std::map<std::string, std::vector<std::string>> concepts_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::string> owner_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_word_;
};

/// The shipped IPR concept inventory; data/lawpoints.json holds the same content.
inline LawpointDictionary default_lawpoints() {
  return LawpointDictionary({
      {"Assignment", {"assignment", "assignor", "assignee", "deed of assignment"}},
      {"Copyright",
       {"copyright", "universal copyright convention", "berne convention", "copyright act",
        "literary work", "artistic work", "copyright society"}},
      {"Damages",
       {"damages", "punitive damages", "compensatory damages", "rendition of accounts"}},
      {"Design", {"design", "designs act", "registered design", "industrial design"}},
      {"Fair Dealing", {"fair dealing", "fair use"}},
      {"Geographical Indication",
       {"geographical indication", "geographical indications act", "gi tag"}},
      {"Infringement", {"infringement", "infringed", "infringing", "infringing copies"}},
      {"Injunction",
       {"injunction", "interim injunction", "permanent injunction", "ad interim injunction"}},
      {"Licensing", {"licence", "license agreement", "compulsory licence", "licensee"}},
      {"Passing Off", {"passing off", "misrepresentation to the public"}},
      {"Patent",
       {"patent", "patents act", "patent cooperation treaty", "prior art", "inventive step",
        "patentee"}},
      {"Royalty", {"royalty", "royalties"}},
      {"Trade Secret", {"trade secret", "confidential information", "non-disclosure agreement"}},
      {"Trademark",
       {"trademark", "trade mark", "trade marks act", "ghost mark", "distinctive dilusion",
        "non-standard certification marks", "deceptive similarity"}},
  });
}

struct Mention {
  std::string doc_id;
  std::string phrase;
  std::string concept_label;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Mention&) const = default;
};

/// Leftmost, then longest, non-overlapping exact phrase matches on word boundaries.
/// Matching is case-insensitive and treats any whitespace run as a single space.
inline std::vector<Mention> match_lawpoints(const Document& doc, const LawpointDictionary& dict) {
  std::vector<Mention> out;
  const auto seq = detail::word_sequence(doc.body);
  const auto& entries = dict.entries();
  std::size_t i = 0;
  while (i < seq.words.size()) {
    const auto* cands = dict.candidates(seq.words[i]);
    const LawpointDictionary::Entry* hit = nullptr;
    if (cands) {
      for (const auto idx : *cands) {
        const auto& e = entries[idx];
        const std::size_t n = e.words.size();
        if (i + n > seq.words.size()) continue;
        bool ok = true;
        for (std::size_t k = 1; k < n && ok; ++k) {
          ok = seq.words[i + k] == e.words[k] && seq.separators[i + k - 1] == e.separators[k - 1];
        }
        if (ok) {
          hit = &e;
          break;
        }
      }
    }
    if (!hit) {
      ++i;
      continue;
    }
    const std::size_t last = i + hit->words.size() - 1;
    out.push_back(Mention{doc.id, hit->phrase, hit->concept_label, seq.spans[i].first,
                          seq.spans[last].second});
    i = last + 1;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Mention& m) {
  nlohmann::ordered_json j;
  j["doc_id"] = m.doc_id;
  j["phrase"] = m.phrase;
  j["concept"] = m.concept_label;
  j["span"] = {m.begin, m.end};
  return j;
}

inline Mention mention_from_json(const nlohmann::json& j) {
  Mention m;
  m.doc_id = j.at("doc_id").get<std::string>();
  m.phrase = j.at("phrase").get<std::string>();
  m.concept_label = j.at("concept").get<std::string>();
  m.begin = j.at("span").at(0).get<std::size_t>();
  m.end = j.at("span").at(1).get<std::size_t>();
  return m;
}

using MentionIndex = std::map<std::string, std::vector<Mention>>; // by doc id

inline void save_mentions(const std::string& path, const MentionIndex& mentions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write mentions file '" + path + "'");
  for (const auto& [id, list] : mentions) {
    for (const auto& m : list) out << to_json(m).dump() << '\n';
  }
}

inline MentionIndex load_mentions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mentions file '" + path + "'");
  MentionIndex out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto m = mention_from_json(nlohmann::json::parse(line));
      out[m.doc_id].push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("mentions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alias canonicalization

class AliasTable {
public:
  AliasTable() = default;

  /// Keys and values are normalized. A canonical label may not itself be an alias
  /// of a different label.
  explicit AliasTable(const std::map<std::string, std::string>& aliases) {
    for (const auto& [alias, canonical] : aliases) {
      const auto a = text::normalize(alias);
      const auto c = text::normalize(canonical);
      if (a.empty() || c.empty()) throw DataError("alias table has an empty entry");
      if (const auto it = map_.find(a); it != map_.end() && it->second != c) {
        throw DataError("alias '" + a + "' maps to both '" + it->second + "' and '" + c + "'");
      }
      map_[a] = c;
    }
    for (const auto& [a, c] : map_) {
      if (const auto it = map_.find(c); it != map_.end() && it->second != c) {
        throw DataError("canonical label '" + c + "' is itself an alias of '" + it->second + "'");
      }
    }
  }

  static AliasTable from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("alias table must be a JSON object");
    std::map<std::string, std::string> m;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) throw DataError("alias '" + k + "' must map to a string");
      m[k] = v.get<std::string>();
    }
    return AliasTable(m);
  }

  static AliasTable load(const std::string& path) {
    return from_json(detail::read_json_file(path, "alias table"));
  }

  std::string canonicalize(std::string_view surface) const {
    auto key = text::normalize(surface);
    const auto it = map_.find(key);
    return it == map_.end() ? key : it->second;
  }

  const std::map<std::string, std::string>& entries() const { return map_; }

private:
  std::map<std::string, std::string> map_;
};

inline std::string canonicalize(std::string_view surface, const AliasTable& aliases) {
  return aliases.canonicalize(surface);
}

/// Renamed Indian cities and the courts named after them.
inline AliasTable default_aliases() {
  return AliasTable({
      {"bombay", "mumbai"},
      {"madras", "chennai"},
      {"calcutta", "kolkata"},
      {"bombay high court", "mumbai high court"},
      {"high court of bombay", "mumbai high court"},
      {"high court of mumbai", "mumbai high court"},
      {"madras high court", "chennai high court"},
      {"high court of madras", "chennai high court"},
      {"calcutta high court", "kolkata high court"},
      {"high court of calcutta", "kolkata high court"},
      {"sc", "supreme court of india"},
      {"supreme court", "supreme court of india"},
      {"hon'ble supreme court of india", "supreme court of india"},
      {"ipab", "intellectual property appellate board"},
  });
}

// ---------------------------------------------------------------------------
// Ontology

struct RelationSignature {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const RelationSignature&) const = default;
};

class Ontology {
public:
  Ontology() = default;

  Ontology(std::vector<std::string> node_types, std::vector<RelationSignature> relations)
      : node_types_(node_types.begin(), node_types.end()), relations_(std::move(relations)) {
    std::set<RelationSignature> seen;
    for (const auto& r : relations_) {
      for (const auto* t : {&r.subject, &r.object}) {
        if (!node_types_.contains(*t)) {
          throw DataError("relation '" + r.predicate + "' references undeclared node type '" +
                          *t + "'");
        }
      }
      if (r.predicate.empty()) throw DataError("relation signature with an empty predicate");
      if (!seen.insert(r).second) {
        throw DataError("duplicate relation signature (" + r.subject + ", " + r.predicate + ", " +
                        r.object + ")");
      }
      predicates_.insert(r.predicate);
    }
  }

  static Ontology from_json(const nlohmann::json& j) {
    try {
      std::vector<std::string> types = j.at("node_types").get<std::vector<std::string>>();
      std::vector<RelationSignature> rels;
      for (const auto& r : j.at("relation_types")) {
        if (!r.is_array() || r.size() != 3) {
          throw DataError("ontology relation_types entries must be 3-element arrays");
        }
        rels.push_back({r[0].get<std::string>(), r[1].get<std::string>(), r[2].get<std::string>()});
      }
      return Ontology(std::move(types), std::move(rels));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed ontology: ") + e.what());
    }
  }

  static Ontology load(const std::string& path) {
    return from_json(detail::read_json_file(path, "ontology"));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["node_types"] = std::vector<std::string>(node_types_.begin(), node_types_.end());
    j["relation_types"] = nlohmann::json::array();
    for (const auto& r : relations_) j["relation_types"].push_back({r.subject, r.predicate, r.object});
    return j;
  }

  const std::set<std::string>& node_types() const { return node_types_; }
  const std::vector<RelationSignature>& relations() const { return relations_; }
  const std::set<std::string>& predicates() const { return predicates_; }
  bool has_predicate(std::string_view p) const { return predicates_.contains(std::string(p)); }

  /// Object type for `predicate` given the subject type; falls back to the first
  /// signature with that predicate.
  std::optional<std::string> object_type(std::string_view subject, std::string_view predicate) const {
    const RelationSignature* fallback = nullptr;
    for (const auto& r : relations_) {
      if (r.predicate != predicate) continue;
      if (r.subject == subject) return r.object;
      if (!fallback) fallback = &r;
    }
    if (fallback) return fallback->object;
    return std::nullopt;
  }

private:
  std::set<std::string> node_types_;
  std::vector<RelationSignature> relations_;
  std::set<std::string> predicates_;
};

/// The shipped ontology; data/ontology.json holds the same content.
inline Ontology default_ontology() {
  std::vector<std::string> types = {"court",     "judge",     "case",      "judgement",
                                    "section",   "article",   "plaintiff", "defendant",
                                    "appellant", "jurisdiction", "lawpoint", "act"};
  std::vector<RelationSignature> rels;
  for (const std::string subject : {"case", "judgement"}) {
    rels.push_back({subject, "court", "court"});
    rels.push_back({subject, "judge", "judge"});
    rels.push_back({subject, "plaintiff", "plaintiff"});
    rels.push_back({subject, "defendant", "defendant"});
    rels.push_back({subject, "appellant", "appellant"});
    rels.push_back({subject, "jurisdiction", "jurisdiction"});
    rels.push_back({subject, "section", "section"});
    rels.push_back({subject, "article", "article"});
    rels.push_back({subject, "act", "act"});
    rels.push_back({subject, "lawpoint", "lawpoint"});
    rels.push_back({subject, "cites", "case"});
    rels.push_back({subject, "similar_to", "case"});
  }
  rels.push_back({"act", "section", "section"});
  rels.push_back({"act", "article", "article"});
  rels.push_back({"act", "lawpoint", "lawpoint"});
  rels.push_back({"act", "cites", "act"});
  rels.push_back({"judge", "court", "court"});
  rels.push_back({"court", "jurisdiction", "jurisdiction"});
  return Ontology(std::move(types), std::move(rels));
}

// ---------------------------------------------------------------------------
// Triples and the knowledge graph

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const Triple&) const = default;
};

/// Metadata key -> predicate. Keys not listed are not extracted.
inline const std::vector<std::pair<std::string, std::string>>& metadata_predicates() {
  static const std::vector<std::pair<std::string, std::string>> rules = {
      {"judges", "judge"},         {"plaintiffs", "plaintiff"}, {"defendants", "defendant"},
      {"appellants", "appellant"}, {"jurisdiction", "jurisdiction"}, {"sections", "section"},
      {"articles", "article"},     {"acts", "act"},
  };
  return rules;
}

inline std::string entity_type_of(DocType t) {
  switch (t) {
  case DocType::kCase: return "case";
  case DocType::kJudgment: return "judgement";
  case DocType::kLegislation: return "act";
  }
  return "case";
}

/// Triples for one document, sorted by (predicate, object) and deduplicated.
/// Metadata values and lawpoint concepts are canonicalized; document ids are kept verbatim.
inline std::vector<Triple> extract_triples(const Document& doc, const std::vector<Mention>& mentions,
                                           const Ontology& ontology, const AliasTable& aliases) {
  std::set<std::pair<std::string, std::string>> found; // (predicate, object)
  auto add = [&](const std::string& predicate, std::string object) {
    if (!ontology.has_predicate(predicate)) {
      throw DataError("predicate '" + predicate + "' is not in the ontology");
    }
    if (!object.empty()) found.emplace(predicate, std::move(object));
  };
  if (!text::trim(doc.court).empty()) add("court", aliases.canonicalize(doc.court));
  for (const auto& [key, predicate] : metadata_predicates()) {
    const auto it = doc.metadata.find(key);
    if (it == doc.metadata.end()) continue;
    for (const auto& item : text::list_items(it->second)) add(predicate, aliases.canonicalize(item));
  }
  for (const auto& m : mentions) add("lawpoint", aliases.canonicalize(m.concept_label));
  for (const auto& c : doc.citations) add("cites", c);
  if (const auto it = doc.metadata.find(std::string(meta::kSimilarTo)); it != doc.metadata.end()) {
    for (const auto& item : text::list_items(it->second)) {
      if (item != doc.id) add("similar_to", item);
    }
  }
  std::vector<Triple> out;
  out.reserve(found.size());
  for (const auto& [p, o] : found) out.push_back(Triple{doc.id, p, o});
  return out;
}

struct Entity {
  std::string id; // canonical label, or the document id for documents
  std::string surface;
  std::string type;
};

struct KnowledgeGraph {
  std::map<std::pair<std::string, std::string>, Entity> entities; // keyed by (type, id)
  std::set<Triple> triples;
  std::set<std::string> relations; // predicates that occur in `triples`
};

inline KnowledgeGraph build_knowledge_graph(const Corpus& corpus, const MentionIndex& mentions,
                                            const Ontology& ontology, const AliasTable& aliases) {
  KnowledgeGraph kg;
  std::map<std::string, std::string> doc_types;
  for (const auto& doc : corpus) doc_types[doc.id] = entity_type_of(doc.doc_type);
  static const std::vector<Mention> kNone;
  for (const auto& doc : corpus) {
    const auto subject_type = doc_types[doc.id];
    kg.entities.try_emplace({subject_type, doc.id}, Entity{doc.id, doc.title, subject_type});
    const auto it = mentions.find(doc.id);
    const auto& doc_mentions = it == mentions.end() ? kNone : it->second;
    for (auto& t : extract_triples(doc, doc_mentions, ontology, aliases)) {
      std::string object_type;
      if (t.predicate == "cites" || t.predicate == "similar_to") {
        const auto dt = doc_types.find(t.object);
        object_type = dt != doc_types.end() ? dt->second : "case";
      } else {
        object_type = ontology.object_type(subject_type, t.predicate).value_or(t.predicate);
      }
      kg.entities.try_emplace({object_type, t.object}, Entity{t.object, t.object, object_type});
      kg.relations.insert(t.predicate);
      kg.triples.insert(std::move(t));
    }
  }
  return kg;
}

/// TSV: subject<TAB>predicate<TAB>object, one triple per line, sorted.
inline void write_triples_tsv(std::ostream& out, const std::set<Triple>& triples) {
  for (const auto& t : triples) out << t.subject << '\t' << t.predicate << '\t' << t.object << '\n';
}

struct StatsReport {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t triples = 0;
  std::size_t entities = 0;
  std::size_t relations = 0;

  bool operator==(const StatsReport&) const = default;
};

inline StatsReport kg_stats(const KnowledgeGraph& kg, const Corpus& corpus) {
  StatsReport r;
  r.documents = corpus.size();
  for (const auto& doc : corpus) r.sentences += count_sentences(doc.body);
  r.triples = kg.triples.size();
  r.entities = kg.entities.size();
  r.relations = kg.relations.size();
  return r;
}

inline nlohmann::ordered_json to_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  j["documents"] = r.documents;
  j["sentences"] = r.sentences;
  j["triples"] = r.triples;
  j["entities"] = r.entities;
  j["relations"] = r.relations;
  return j;
}

inline StatsReport stats_from_json(const nlohmann::json& j) {
  StatsReport r;
  r.documents = j.at("documents").get<std::size_t>();
  r.sentences = j.at("sentences").get<std::size_t>();
  r.triples = j.at("triples").get<std::size_t>();
  r.entities = j.at("entities").get<std::size_t>();
  r.relations = j.at("relations").get<std::size_t>();
  return r;
}

/// Mentions for every document of the corpus.
inline MentionIndex annotate_corpus(const Corpus& corpus, const LawpointDictionary& dict) {
  MentionIndex out;
  for (const auto& doc : corpus) {
    auto m = match_lawpoints(doc, dict);
    if (!m.empty()) out[doc.id] = std::move(m);
  }
  return out;
}

} // namespace lkg
