#pragma once

#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "porter.hpp"
#include "text.hpp"

namespace lkg {

enum class DocType { kCase, kJudgment, kLegislation };

inline std::string_view to_string(DocType t) {
  switch (t) {
  case DocType::kCase: return "case";
  case DocType::kJudgment: return "judgment";
  case DocType::kLegislation: return "legislation";
  }
  return "case";
}

inline std::optional<DocType> parse_doc_type(std::string_view s) {
  if (s == "case") return DocType::kCase;
  if (s == "judgment") return DocType::kJudgment;
  if (s == "legislation") return DocType::kLegislation;
  return std::nullopt;
}

struct CalendarDate {
  int year = 0;
  int month = 0;
  int day = 0;
};

/// Strict YYYY-MM-DD with a real calendar day.
inline std::optional<CalendarDate> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  const auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return std::nullopt;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (*y % 4 == 0 && *y % 100 != 0) || *y % 400 == 0;
  const int max_day = kDays[*m - 1] + ((*m == 2 && leap) ? 1 : 0);
  if (*d > max_day) return std::nullopt;
  return CalendarDate{*y, *m, *d};
}

struct Document {
  std::string id;
  std::string title;
  std::string court;
  DocType doc_type = DocType::kCase;
  std::string date; // empty when absent
  std::string body;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> citations;

  bool has_date() const { return !date.empty(); }
  bool operator==(const Document&) const = default;
};

using Corpus = std::vector<Document>;

// Well-known metadata keys. List-valued keys hold `;`-separated items.
namespace meta {
inline constexpr std::string_view kJudges = "judges";
inline constexpr std::string_view kPlaintiffs = "plaintiffs";
inline constexpr std::string_view kDefendants = "defendants";
inline constexpr std::string_view kAppellants = "appellants";
inline constexpr std::string_view kJurisdiction = "jurisdiction";
inline constexpr std::string_view kSections = "sections";
inline constexpr std::string_view kActs = "acts";
inline constexpr std::string_view kSimilarTo = "similar_to";
} // namespace meta

inline nlohmann::ordered_json to_json(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["title"] = doc.title;
  j["court"] = doc.court;
  j["doc_type"] = std::string(to_string(doc.doc_type));
  j["date"] = doc.date.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(doc.date);
  j["body"] = doc.body;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : doc.metadata) j["metadata"][k] = v;
  j["citations"] = doc.citations;
  return j;
}

namespace detail {

inline std::string optional_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw DataError("line " + std::to_string(line) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

} // namespace detail

/// Parses one JSONL record. `line` is only used in error messages.
inline Document document_from_json(const nlohmann::json& j, std::size_t line) {
  const std::string where = "line " + std::to_string(line) + ": ";
  if (!j.is_object()) throw DataError(where + "expected a JSON object");
  Document doc;
  doc.id = detail::optional_string(j, "id", line);
  if (doc.id.empty()) throw DataError(where + "missing or empty 'id'");
  doc.title = detail::optional_string(j, "title", line);
  doc.court = detail::optional_string(j, "court", line);
  const auto type = detail::optional_string(j, "doc_type", line);
  if (!type.empty()) {
    const auto parsed = parse_doc_type(type);
    if (!parsed) throw DataError(where + "unknown doc_type '" + type + "'");
    doc.doc_type = *parsed;
  }
  doc.date = detail::optional_string(j, "date", line);
  if (!doc.date.empty() && !parse_date(doc.date)) {
    throw DataError(where + "date '" + doc.date + "' is not an ISO-8601 calendar date");
  }
  doc.body = detail::optional_string(j, "body", line);
  if (const auto it = j.find("metadata"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError(where + "'metadata' must be an object");
    for (const auto& [k, v] : it->items()) {
      if (v.is_string()) {
        doc.metadata[k] = v.get<std::string>();
      } else if (v.is_number()) {
        doc.metadata[k] = v.dump();
      } else {
        throw DataError(where + "metadata value for '" + k + "' must be a string or number");
      }
    }
  }
  if (const auto it = j.find("citations"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError(where + "'citations' must be an array");
    for (const auto& c : *it) {
      if (!c.is_string()) throw DataError(where + "citation ids must be strings");
      doc.citations.push_back(c.get<std::string>());
    }
  }
  for (const auto& c : doc.citations) {
    if (c == doc.id) throw DataError(where + "document '" + doc.id + "' cites itself");
  }
  return doc;
}

inline Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    auto doc = document_from_json(j, line_no);
    const auto [it, inserted] = first_line.emplace(doc.id, line_no);
    if (!inserted) {
      throw DataError("duplicate document id '" + doc.id + "' on lines " +
                      std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return parse_corpus(in);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& doc : corpus) out << to_json(doc).dump() << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file '" + path + "'");
  write_corpus(out, corpus);
}

inline const Document* find_document(const Corpus& corpus, std::string_view id) {
  for (const auto& doc : corpus) {
    if (doc.id == id) return &doc;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Tokenization

struct Token {
  std::string surface; // lowercased
  std::string stem;
  std::size_t begin = 0; // byte offsets into the body, [begin, end)
  std::size_t end = 0;
};

using TokenStream = std::vector<Token>;
using StopwordSet = std::unordered_set<std::string>;

/// Byte spans of the maximal letter/digit runs of `body`.
inline std::vector<std::pair<std::size_t, std::size_t>> word_spans(std::string_view body) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t i = 0;
  while (i < body.size()) {
    const auto c = text::decode_utf8(body, i);
    if (!text::is_word_char(c.value)) {
      i += c.length;
      continue;
    }
    const std::size_t begin = i;
    while (i < body.size()) {
      const auto d = text::decode_utf8(body, i);
      if (!text::is_word_char(d.value)) break;
      i += d.length;
    }
    spans.emplace_back(begin, i);
  }
  return spans;
}

inline TokenStream tokenize(std::string_view body, const StopwordSet& stopwords) {
  TokenStream out;
  const PorterStemmer stem;
  for (const auto& [begin, end] : word_spans(body)) {
    auto surface = text::lower(body.substr(begin, end - begin));
    if (stopwords.contains(surface)) continue;
    auto stemmed = stem(surface);
    out.push_back(Token{std::move(surface), std::move(stemmed), begin, end});
  }
  return out;
}

/// English stopword list (179 words), mirrored by data/stopwords.txt.
inline const std::vector<std::string>& default_stopword_list() {
  static const std::vector<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
      "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his",
      "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself",
      "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
      "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be", "been",
      "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an", "the",
      "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
      "with", "about", "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
      "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
      "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
      "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just",
      "don", "don't", "should", "should've", "now", "d", "ll", "m", "o", "re", "ve", "y",
      "ain", "aren", "aren't", "couldn", "couldn't", "didn", "didn't", "doesn", "doesn't",
      "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma", "mightn",
      "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't", "shouldn",
      "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't"};
  return words;
}

inline StopwordSet default_stopwords() {
  const auto& list = default_stopword_list();
  return StopwordSet(list.begin(), list.end());
}

/// One word per line; blank lines and lines starting with '#' are ignored.
inline StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file '" + path + "'");
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = text::trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.insert(text::lower(w));
  }
  return words;
}

/// Sentence count under a fixed splitter: a boundary is '.', '?' or '!' followed by
/// whitespace and then an uppercase letter. Nonblank text has boundaries + 1 sentences.
inline std::size_t count_sentences(std::string_view body) {
  bool any = false;
  for (char c : body) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      any = true;
      break;
    }
  }
  if (!any) return 0;
  std::size_t boundaries = 0;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c != '.' && c != '?' && c != '!') continue;
    std::size_t k = i + 1;
    bool saw_space = false;
    while (k < body.size()) {
      const auto cp = text::decode_utf8(body, k);
      if (!text::is_space(cp.value)) break;
      saw_space = true;
      k += cp.length;
    }
    if (!saw_space || k >= body.size()) continue;
    const auto next = text::decode_utf8(body, k);
    if (text::is_word_char(next.value) && text::to_lower(next.value) != next.value) ++boundaries;
  }
  return boundaries + 1;
}

inline std::size_t count_words(std::string_view body) { return word_spans(body).size(); }

// ---------------------------------------------------------------------------
// Citation traversal

using CitationIndex = std::map<std::string, std::vector<std::string>>;

inline CitationIndex citation_index(const Corpus& corpus) {
  CitationIndex index;
  for (const auto& doc : corpus) index[doc.id] = doc.citations;
  return index;
}

/// Every id reachable from `seeds` along outgoing citations in at most `max_depth`
/// hops, seeds included.
inline std::set<std::string> bfs_expand(const std::set<std::string>& seeds,
                                        const CitationIndex& index, std::size_t max_depth) {
  std::unordered_set<std::string> known;
  for (const auto& [id, cited] : index) {
    known.insert(id);
    known.insert(cited.begin(), cited.end());
  }
  for (const auto& s : seeds) {
    if (!known.contains(s)) throw DataError("unknown seed document id '" + s + "'");
  }
  std::set<std::string> visited(seeds.begin(), seeds.end());
  std::vector<std::string> frontier(seeds.begin(), seeds.end());
  for (std::size_t depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    std::vector<std::string> next;
    for (const auto& id : frontier) {
      const auto it = index.find(id);
      if (it == index.end()) continue;
      for (const auto& cited : it->second) {
        if (visited.insert(cited).second) next.push_back(cited);
      }
    }
    frontier = std::move(next);
  }
  return visited;
}

} // namespace lkg
