#pragma once

#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "annotate.hpp"
#include "casegraph.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "explain.hpp"
#include "gnn.hpp"
#include "http.hpp"
#include "service.hpp"
#include "synth.hpp"
#include "topics.hpp"

namespace lkg {

namespace cli_detail {

/// JSON config files. Top-level keys are flag names of the invoked subcommand; a key
/// naming a subcommand may instead hold an object of that subcommand's flags.
class JsonConfig : public CLI::Config {
public:
  explicit JsonConfig(std::vector<std::string> subcommands) : subcommands_(std::move(subcommands)) {}

  void set_active(std::string sub) { active_ = std::move(sub); }

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::ordered_json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? nlohmann::ordered_json(r.front()) : nlohmann::ordered_json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object() && std::find(subcommands_.begin(), subcommands_.end(), key) != subcommands_.end()) {
        for (const auto& [k, v] : value.items()) items.push_back(item({key}, k, v));
      } else {
        items.push_back(item(active_.empty() ? std::vector<std::string>{} : std::vector<std::string>{active_}, key, value));
      }
    }
    return items;
  }

private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const nlohmann::json& v) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }

  std::vector<std::string> subcommands_;
  std::string active_;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path + "'");
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

inline LawpointDictionary lawpoints_from(const std::string& path) {
  return path.empty() ? default_lawpoints() : LawpointDictionary::load(path);
}

inline AliasTable aliases_from(const std::string& path) {
  return path.empty() ? default_aliases() : AliasTable::load(path);
}

inline Ontology ontology_from(const std::string& path) {
  return path.empty() ? default_ontology() : Ontology::load(path);
}

inline FeatureSpec feature_spec_from(const std::string& name, const LawpointDictionary& dict) {
  FeatureSpec spec;
  if (name == "base13" || name == "base") {
    spec = base_feature_spec();
  } else if (name == "full27" || name == "full") {
    spec = lawpoint_feature_spec(dict);
  } else {
    spec = FeatureSpec::load(name);
  }
  spec.validate(dict);
  return spec;
}

inline std::set<std::string> split_ids(const std::string& s) {
  std::set<std::string> out;
  for (const auto& part : text::split(s, ',')) {
    const auto t = text::trim(part);
    if (!t.empty()) out.insert(std::string(t));
  }
  return out;
}

} // namespace cli_detail

/// Runs the command-line driver. Exit codes: 0 success, 1 usage error, 2 data error.
/// `on_listen`, when given, receives the bound server and its port before `serve` starts listening.
inline int cli_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr,
                   std::function<void(httplib::Server&, int)> on_listen = {}) {
  CLI::App app{"Legal knowledge-graph and case-similarity pipeline", "lkg"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  const std::vector<std::string> names = {"ingest", "annotate", "topics", "build-graph", "train",
                                          "eval",   "explain",  "synth",  "serve"};
  auto formatter = std::make_shared<cli_detail::JsonConfig>(names);
  for (int i = 1; i < argc; ++i) {
    if (std::find(names.begin(), names.end(), argv[i]) != names.end()) {
      formatter->set_active(argv[i]);
      break;
    }
  }
  app.config_formatter(formatter);
  app.set_config("--config", "", "JSON file supplying flag values; explicit flags take precedence");

  std::function<void()> action;

  // synth
  SynthConfig synth;
  std::optional<std::uint64_t> synth_seed;
  std::string synth_out, synth_truth;
  {
    auto* c = app.add_subcommand("synth", "Generate a synthetic corpus with planted topics and links");
    c->add_option("--docs", synth.n_docs, "Number of documents")->capture_default_str();
    c->add_option("--topics", synth.n_topics, "Number of planted topics")->capture_default_str();
    c->add_option("--vocab", synth.vocab_size, "Vocabulary size")->capture_default_str();
    c->add_option("--doc-length", synth.doc_length, "Mean document length in words")->capture_default_str();
    c->add_option("--density", synth.citation_density, "Base citation probability")->capture_default_str();
    c->add_option("--correlation", synth.feature_link_correlation, "Feature-link correlation in [0,1]")->capture_default_str();
    c->add_option("--seed", synth_seed, "Random seed")->required();
    c->add_option("--out", synth_out, "Output corpus JSONL")->required();
    c->add_option("--truth", synth_truth, "Optional planted-truth JSON output");
    c->callback([&] {
      action = [&] {
        synth.seed = *synth_seed;
        synth.validate();
        const auto [corpus, truth] = synth_corpus(synth);
        save_corpus(synth_out, corpus);
        if (!synth_truth.empty()) cli_detail::write_json(synth_truth, to_json(truth));
        out << "wrote " << corpus.size() << " documents to " << synth_out << "\n";
      };
    });
  }

  // ingest
  std::string ingest_corpus, ingest_out, ingest_seeds;
  std::size_t ingest_depth = 1;
  {
    auto* c = app.add_subcommand("ingest", "Validate a corpus and optionally expand a seed set along citations");
    c->add_option("--corpus", ingest_corpus, "Input corpus JSONL")->required();
    c->add_option("--out", ingest_out, "Output corpus JSONL (normalized; the expanded subset when seeds are given)");
    c->add_option("--seeds", ingest_seeds, "Comma-separated seed document ids");
    c->add_option("--depth", ingest_depth, "Citation hops for seed expansion")->capture_default_str();
    c->callback([&] {
      action = [&] {
        auto corpus = load_corpus(ingest_corpus);
        if (!ingest_seeds.empty()) {
          const auto keep = bfs_expand(cli_detail::split_ids(ingest_seeds), citation_index(corpus), ingest_depth);
          std::erase_if(corpus, [&](const Document& d) { return !keep.contains(d.id); });
        }
        std::size_t citations = 0, dated = 0;
        for (const auto& d : corpus) {
          citations += d.citations.size();
          dated += d.has_date() ? 1 : 0;
        }
        if (!ingest_out.empty()) save_corpus(ingest_out, corpus);
        nlohmann::ordered_json j{{"documents", corpus.size()}, {"citations", citations}, {"dated", dated}};
        out << j.dump() << "\n";
      };
    });
  }

  // annotate
  std::string ann_corpus, ann_lawpoints, ann_aliases, ann_ontology, ann_mentions, ann_triples, ann_stats;
  {
    auto* c = app.add_subcommand("annotate", "Annotate lawpoints and extract knowledge-graph triples");
    c->add_option("--corpus", ann_corpus, "Input corpus JSONL")->required();
    c->add_option("--lawpoints", ann_lawpoints, "Lawpoint dictionary JSON (built-in when omitted)");
    c->add_option("--aliases", ann_aliases, "Alias table JSON (built-in when omitted)");
    c->add_option("--ontology", ann_ontology, "Ontology JSON (built-in when omitted)");
    c->add_option("--mentions-out", ann_mentions, "Mentions JSONL output")->required();
    c->add_option("--triples-out", ann_triples, "Triples TSV output");
    c->add_option("--stats-out", ann_stats, "Knowledge-graph statistics JSON output");
    c->callback([&] {
      action = [&] {
        const auto corpus = load_corpus(ann_corpus);
        const auto dict = cli_detail::lawpoints_from(ann_lawpoints);
        const auto mentions = annotate_corpus(corpus, dict);
        save_mentions(ann_mentions, mentions);
        const auto kg = build_knowledge_graph(corpus, mentions, cli_detail::ontology_from(ann_ontology),
                                              cli_detail::aliases_from(ann_aliases));
        if (!ann_triples.empty()) {
          std::ostringstream tsv;
          write_triples_tsv(tsv, kg.triples);
          cli_detail::write_text(ann_triples, tsv.str());
        }
        const auto stats = to_json(kg_stats(kg, corpus));
        if (!ann_stats.empty()) cli_detail::write_json(ann_stats, stats);
        out << stats.dump() << "\n";
      };
    });
  }

  // topics
  std::string top_corpus, top_stopwords, top_out, top_report, top_ontology;
  LdaConfig lda;
  std::optional<double> lda_alpha;
  std::optional<std::uint64_t> top_seed;
  std::size_t top_n = 10, top_words_n = 10;
  {
    auto* c = app.add_subcommand("topics", "Fit an LDA topic model and report topics with feature suggestions");
    c->add_option("--corpus", top_corpus, "Input corpus JSONL")->required();
    c->add_option("-k,--k", lda.topics, "Number of topics")->capture_default_str();
    c->add_option("--iterations", lda.iterations, "Gibbs sweeps")->capture_default_str();
    c->add_option("--alpha", lda_alpha, "Document-topic prior (default 50/K)");
    c->add_option("--beta", lda.beta, "Topic-word prior")->capture_default_str();
    c->add_option("--seed", top_seed, "Random seed")->required();
    c->add_option("--stopwords", top_stopwords, "Stopword list, one per line (built-in when omitted)");
    c->add_option("--ontology", top_ontology, "Ontology JSON for feature suggestions (built-in when omitted)");
    c->add_option("--top", top_n, "Topics to report")->capture_default_str();
    c->add_option("--words", top_words_n, "Words per reported topic")->capture_default_str();
    c->add_option("--out", top_out, "Topic model checkpoint output")->required();
    c->add_option("--report", top_report, "Topic report JSON output");
    c->callback([&] {
      action = [&] {
        lda.alpha = lda_alpha;
        lda.seed = *top_seed;
        const auto corpus = load_corpus(top_corpus);
        const auto stop = top_stopwords.empty() ? default_stopwords() : load_stopwords(top_stopwords);
        const auto model = fit_lda(stem_corpus(corpus, stop), lda);
        save_topic_model(top_out, model);
        const auto report = topic_report(model, top_n, top_words_n);
        const auto suggestions = suggest_features(report, cli_detail::ontology_from(top_ontology));
        nlohmann::ordered_json j;
        j["topics"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < report.size(); ++i) {
          auto t = to_json(report[i]);
          t["ontology_concept"] = suggestions[i].ontology_concept ? nlohmann::ordered_json(*suggestions[i].ontology_concept)
                                                                  : nlohmann::ordered_json(nullptr);
          j["topics"].push_back(std::move(t));
        }
        j["log_likelihood"] = model.likelihood_trace.empty() ? nlohmann::ordered_json(nullptr)
                                                             : nlohmann::ordered_json(model.likelihood_trace.back().second);
        if (!top_report.empty()) cli_detail::write_json(top_report, j);
        out << j.dump() << "\n";
      };
    });
  }

  // build-graph
  std::string bg_corpus, bg_mentions, bg_features = "full27", bg_lawpoints, bg_aliases, bg_out;
  {
    auto* c = app.add_subcommand("build-graph", "Encode case features and assemble the case graph");
    c->add_option("--corpus", bg_corpus, "Input corpus JSONL")->required();
    c->add_option("--mentions", bg_mentions, "Mentions JSONL from annotate")->required();
    c->add_option("--features", bg_features, "base13, full27, or a feature spec JSON file")->capture_default_str();
    c->add_option("--lawpoints", bg_lawpoints, "Lawpoint dictionary JSON (built-in when omitted)");
    c->add_option("--aliases", bg_aliases, "Alias table JSON (built-in when omitted)");
    c->add_option("--out", bg_out, "Case graph JSON output")->required();
    c->callback([&] {
      action = [&] {
        const auto dict = cli_detail::lawpoints_from(bg_lawpoints);
        const auto spec = cli_detail::feature_spec_from(bg_features, dict);
        const auto graph = build_case_graph(load_corpus(bg_corpus), load_mentions(bg_mentions), spec,
                                            cli_detail::aliases_from(bg_aliases));
        save_case_graph(bg_out, graph);
        nlohmann::ordered_json j{{"nodes", graph.size()}, {"features", graph.spec.size()}};
        for (const auto& [r, e] : graph.edges) j["edges"][r] = e.size();
        out << j.dump() << "\n";
      };
    });
  }

  // train
  std::string tr_graph, tr_out, tr_report, tr_optimizer = "adam", tr_layer = "rgcn";
  TrainConfig tc;
  std::optional<std::uint64_t> tr_seed;
  {
    auto* c = app.add_subcommand("train", "Train a link-prediction model for one relation");
    c->add_option("--graph", tr_graph, "Case graph JSON")->required();
    c->add_option("--task", tc.task, "Relation to predict (cites or similar_to)")->capture_default_str();
    c->add_option("--epochs", tc.epochs, "Full-batch epochs")->capture_default_str();
    c->add_option("--lr", tc.learning_rate, "Learning rate")->capture_default_str();
    c->add_option("--hidden", tc.hidden_dim, "Hidden layer width")->capture_default_str();
    c->add_option("--embedding", tc.embedding_dim, "Embedding width")->capture_default_str();
    c->add_option("--negative-ratio", tc.negative_ratio, "Negatives per positive")->capture_default_str();
    c->add_option("--test-fraction", tc.test_fraction, "Fraction of edges held out")->capture_default_str();
    c->add_option("--optimizer", tr_optimizer, "adam or sgd")->capture_default_str();
    c->add_option("--layer", tr_layer, "rgcn, sage-mean or sage-pool")->capture_default_str();
    c->add_option("--auc-every", tc.auc_every, "Record test AUC every N epochs")->capture_default_str();
    c->add_option("--seed", tr_seed, "Random seed for the split, negatives and initialization")->required();
    c->add_option("--out", tr_out, "Model checkpoint output")->required();
    c->add_option("--report", tr_report, "Training report JSON output");
    c->callback([&] {
      action = [&] {
        tc.seed = *tr_seed;
        tc.optimizer = parse_optimizer(tr_optimizer);
        tc.layer_kind = parse_layer_kind(tr_layer);
        tc.validate();
        const auto graph = load_case_graph(tr_graph);
        const auto x = normalize_features(graph.features);
        const auto split = make_task_split(graph, tc.task, tc.test_fraction, tc.negative_ratio, tc.seed);
        const auto trained = train(x, split, tc);
        save_checkpoint(tr_out, {trained.model, tc, split, graph.spec.names()});
        if (!tr_report.empty()) cli_detail::write_json(tr_report, to_json(trained.report));
        nlohmann::ordered_json j{{"task", tc.task}, {"epochs", tc.epochs}, {"final_loss", trained.report.losses.back()}};
        if (!trained.report.aucs.empty()) j["test_auc"] = trained.report.aucs.back().second;
        out << j.dump() << "\n";
      };
    });
  }

  // eval
  std::string ev_graph, ev_model, ev_out, ev_csv;
  {
    auto* c = app.add_subcommand("eval", "Score held-out edges and report ROC-AUC");
    c->add_option("--graph", ev_graph, "Case graph JSON")->required();
    c->add_option("--model", ev_model, "Model checkpoint")->required();
    c->add_option("--out", ev_out, "Evaluation report JSON output");
    c->add_option("--csv", ev_csv, "Per-edge scores CSV output");
    c->callback([&] {
      action = [&] {
        const auto graph = load_case_graph(ev_graph);
        const auto ck = load_checkpoint(ev_model);
        if (ck.feature_names != graph.spec.names()) throw DataError("model was trained on a different feature spec");
        const auto report = evaluate(ck.model, graph, normalize_features(graph.features), ck.split, ck.config.task);
        if (!ev_out.empty()) cli_detail::write_json(ev_out, to_json(report));
        if (!ev_csv.empty()) {
          std::ostringstream csv;
          write_scores_csv(csv, report);
          cli_detail::write_text(ev_csv, csv.str());
        }
        out << nlohmann::ordered_json{{"task", report.task}, {"auc", report.auc}, {"n_test_pos", report.n_test_pos},
                                      {"n_test_neg", report.n_test_neg}}.dump()
            << "\n";
      };
    });
  }

  // explain
  std::string ex_graph, ex_corpus, ex_model, ex_u, ex_v, ex_out;
  std::size_t ex_k = 5;
  {
    auto* c = app.add_subcommand("explain", "Compare two cases and attribute their predicted link to features");
    c->add_option("--graph", ex_graph, "Case graph JSON")->required();
    c->add_option("--corpus", ex_corpus, "Corpus JSONL")->required();
    c->add_option("--model", ex_model, "Model checkpoint (omit for a comparison without attributions)");
    c->add_option("-u,--u", ex_u, "First case id")->required();
    c->add_option("-v,--v", ex_v, "Second case id")->required();
    c->add_option("-k,--k", ex_k, "Attributions to report")->capture_default_str();
    c->add_option("--out", ex_out, "Explanation JSON output (stdout when omitted)");
    c->callback([&] {
      action = [&] {
        const auto graph = load_case_graph(ex_graph);
        const auto corpus = load_corpus(ex_corpus);
        const auto x = normalize_features(graph.features);
        const auto u = graph.index_of(ex_u), v = graph.index_of(ex_v);
        if (!u) throw DataError("unknown case id '" + ex_u + "'");
        if (!v) throw DataError("unknown case id '" + ex_v + "'");
        auto e = compare_nodes(graph, x, corpus, *u, *v);
        if (!ex_model.empty()) {
          const auto ck = load_checkpoint(ex_model);
          if (ck.feature_names != graph.spec.names()) throw DataError("model was trained on a different feature spec");
          const auto mg = task_message_graph(graph.size(), ck.config.task, ck.split.train_pos);
          const auto emb = rgcn_forward(mg, x, ck.model);
          e.link_score = sigmoid(distmult_score(emb.row(*u), ck.model.diagonal(ck.config.task).row(0), emb.row(*v)));
          e.top_attributions = attribute_link(ck.model, mg, x, graph.spec.names(), ck.config.task, *u, *v, ex_k);
        }
        const auto j = to_json(e);
        if (ex_out.empty()) {
          out << j.dump(2) << "\n";
        } else {
          cli_detail::write_json(ex_out, j);
        }
      };
    });
  }

  // serve
  std::string sv_corpus, sv_graph, sv_mentions, sv_aliases, sv_ontology, sv_host = "127.0.0.1";
  std::vector<std::string> sv_models;
  int sv_port = 8080;
  {
    auto* c = app.add_subcommand("serve", "Serve cases, similarity rankings and explanations over HTTP");
    c->add_option("--corpus", sv_corpus, "Corpus JSONL")->required();
    c->add_option("--graph", sv_graph, "Case graph JSON")->required();
    c->add_option("--mentions", sv_mentions, "Mentions JSONL (for /stats)")->required();
    c->add_option("--model", sv_models, "Model checkpoint; repeat for each task");
    c->add_option("--aliases", sv_aliases, "Alias table JSON (built-in when omitted)");
    c->add_option("--ontology", sv_ontology, "Ontology JSON (built-in when omitted)");
    c->add_option("--host", sv_host, "Listen address")->capture_default_str();
    c->add_option("--port", sv_port, "Listen port (0 picks a free one)")->capture_default_str();
    c->callback([&] {
      action = [&] {
        PipelineArtifacts a;
        a.corpus = load_corpus(sv_corpus);
        a.graph = load_case_graph(sv_graph);
        const auto kg = build_knowledge_graph(a.corpus, load_mentions(sv_mentions), cli_detail::ontology_from(sv_ontology),
                                              cli_detail::aliases_from(sv_aliases));
        a.stats = kg_stats(kg, a.corpus);
        for (const auto& path : sv_models) {
          auto ck = load_checkpoint(path);
          const auto task = ck.config.task;
          if (a.models.contains(task)) throw UsageError("two models given for task '" + task + "'");
          a.models[task].checkpoint = std::move(ck);
        }
        a.finalize();
        const Service service(a);
        httplib::Server server;
        bind_service(server, service);
        const int port = sv_port == 0 ? server.bind_to_any_port(sv_host) : (server.bind_to_port(sv_host, sv_port) ? sv_port : -1);
        if (port <= 0) throw DataError("cannot listen on " + sv_host + ":" + std::to_string(sv_port));
        out << "listening on http://" << sv_host << ":" << port << "\n" << std::flush;
        if (on_listen) on_listen(server, port);
        server.listen_after_bind();
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    if (action) action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

} // namespace lkg
