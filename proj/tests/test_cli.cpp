#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include <lkg/cli.hpp>

#include "support.hpp"

using namespace lkg;
using lkg::testing::data_path;
using lkg::testing::slurp;
using lkg::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args, std::function<void(httplib::Server&, int)> on_listen = {}) {
  args.insert(args.begin(), "lkg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_run(static_cast<int>(argv.size()), argv.data(), out, err, std::move(on_listen));
  return {code, out.str(), err.str()};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

} // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"train", "--help"}).code, 0);
  EXPECT_EQ(run({"ingest", "--corpus", "/nonexistent/corpus.jsonl"}).code, 2);
  TempDir dir("cli-codes");
  EXPECT_EQ(run({"synth", "--seed", "1", "--docs", "0", "--out", dir.file("c.jsonl")}).code, 1);
  const auto bad = run({"synth", "--seed", "1", "--correlation", "2", "--out", dir.file("c.jsonl")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_FALSE(bad.err.empty());
  write_file(dir.file("broken.jsonl"), "{\"id\": \"a\"\n");
  const auto broken = run({"ingest", "--corpus", dir.file("broken.jsonl")});
  EXPECT_EQ(broken.code, 2);
  EXPECT_NE(broken.err.find("error"), std::string::npos);
}

TEST(Cli, SeedIsRequired) {
  TempDir dir("cli-seed");
  EXPECT_EQ(run({"synth", "--out", dir.file("c.jsonl")}).code, 1);
  EXPECT_FALSE(std::filesystem::exists(dir.file("c.jsonl")));
  ASSERT_EQ(run({"synth", "--seed", "3", "--docs", "20", "--out", dir.file("c.jsonl")}).code, 0);
  EXPECT_EQ(run({"topics", "--corpus", dir.file("c.jsonl"), "--out", dir.file("t.bin")}).code, 1);
  EXPECT_EQ(run({"train", "--graph", dir.file("g.json"), "--out", dir.file("m.bin")}).code, 1);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir dir("cli-config");
  write_file(dir.file("flat.json"), R"({"docs": 30, "seed": 5, "topics": 3, "out": ")" + dir.file("a.jsonl") + "\"}");
  ASSERT_EQ(run({"synth", "--config", dir.file("flat.json")}).code, 0);
  EXPECT_EQ(load_corpus(dir.file("a.jsonl")).size(), 30u);

  ASSERT_EQ(run({"synth", "--config", dir.file("flat.json"), "--docs", "12", "--out", dir.file("b.jsonl")}).code, 0);
  EXPECT_EQ(load_corpus(dir.file("b.jsonl")).size(), 12u);

  write_file(dir.file("nested.json"), R"({"synth": {"docs": 17, "seed": 5, "topics": 3}})");
  ASSERT_EQ(run({"synth", "--config", dir.file("nested.json"), "--out", dir.file("c.jsonl")}).code, 0);
  EXPECT_EQ(load_corpus(dir.file("c.jsonl")).size(), 17u);

  write_file(dir.file("extra.json"), R"({"docs": 10, "seed": 5, "colour": "blue"})");
  EXPECT_EQ(run({"synth", "--config", dir.file("extra.json"), "--out", dir.file("d.jsonl")}).code, 1);
  write_file(dir.file("broken.json"), "{docs");
  EXPECT_EQ(run({"synth", "--config", dir.file("broken.json"), "--out", dir.file("d.jsonl")}).code, 1);
}

TEST(Cli, MiniCorpusPipeline) {
  TempDir dir("cli-mini");
  const auto corpus = data_path("mini_corpus.jsonl");
  auto r = run({"annotate", "--corpus", corpus, "--mentions-out", dir.file("m.jsonl"), "--triples-out", dir.file("t.tsv"),
                "--stats-out", dir.file("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir.file("m.jsonl")), slurp(data_path("golden/mini_mentions.jsonl")));
  EXPECT_EQ(slurp(dir.file("t.tsv")), slurp(data_path("golden/mini_triples.tsv")));
  EXPECT_EQ(nlohmann::json::parse(slurp(dir.file("s.json"))), nlohmann::json::parse(slurp(data_path("golden/mini_stats.json"))));

  r = run({"ingest", "--corpus", corpus, "--seeds", "doc-001", "--depth", "0"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["documents"], 1);

  r = run({"topics", "--corpus", corpus, "-k", "2", "--iterations", "20", "--seed", "1", "--out", dir.file("lda.bin"),
           "--report", dir.file("topics.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir.file("topics.json")))["topics"].size(), 2u);

  r = run({"build-graph", "--corpus", corpus, "--mentions", dir.file("m.jsonl"), "--out", dir.file("g.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["features"], 27);
  EXPECT_EQ(run({"build-graph", "--corpus", corpus, "--mentions", dir.file("m.jsonl"), "--features", "/missing/spec.json", "--out",
                 dir.file("x.json")})
                .code,
            2);

  r = run({"train", "--graph", dir.file("g.json"), "--epochs", "30", "--seed", "2", "--out", dir.file("model.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"eval", "--graph", dir.file("g.json"), "--model", dir.file("model.bin"), "--out", dir.file("eval.json"), "--csv",
           dir.file("eval.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = eval_report_from_json(nlohmann::json::parse(slurp(dir.file("eval.json"))));
  EXPECT_EQ(report.task, "cites");
  EXPECT_EQ(report.edges.size(), report.n_test_pos + report.n_test_neg);

  r = run({"explain", "--graph", dir.file("g.json"), "--corpus", corpus, "--model", dir.file("model.bin"), "-u", "doc-001",
           "-v", "doc-003", "-k", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto e = nlohmann::json::parse(r.out);
  EXPECT_EQ(e["top_attributions"].size(), 4u);
  EXPECT_EQ(run({"explain", "--graph", dir.file("g.json"), "--corpus", corpus, "-u", "doc-001", "-v", "doc-404"}).code, 2);
  EXPECT_EQ(run({"eval", "--graph", dir.file("g.json"), "--model", dir.file("g.json")}).code, 2);
}

TEST(Cli, ServeAnswersRequests) {
  TempDir dir("cli-serve");
  const auto corpus = data_path("mini_corpus.jsonl");
  ASSERT_EQ(run({"annotate", "--corpus", corpus, "--mentions-out", dir.file("m.jsonl")}).code, 0);
  ASSERT_EQ(run({"build-graph", "--corpus", corpus, "--mentions", dir.file("m.jsonl"), "--out", dir.file("g.json")}).code, 0);
  ASSERT_EQ(run({"train", "--graph", dir.file("g.json"), "--task", "similar_to", "--epochs", "10", "--seed", "1", "--out",
                 dir.file("model.bin")})
                .code,
            0);

  std::string stats_body;
  int similar_status = 0;
  std::thread client_thread;
  const auto r = run({"serve", "--corpus", corpus, "--graph", dir.file("g.json"), "--mentions", dir.file("m.jsonl"), "--model",
                      dir.file("model.bin"), "--port", "0"},
                     [&](httplib::Server& server, int port) {
                       client_thread = std::thread([&server, &stats_body, &similar_status, port] {
                         server.wait_until_ready();
                         httplib::Client client("127.0.0.1", port);
                         if (auto res = client.Get("/stats")) stats_body = res->body;
                         if (auto res = client.Get("/cases/doc-001/similar?k=3")) similar_status = res->status;
                         server.stop();
                       });
                     });
  client_thread.join();
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("listening on"), std::string::npos);
  ASSERT_FALSE(stats_body.empty());
  EXPECT_EQ(nlohmann::json::parse(stats_body), nlohmann::json::parse(slurp(data_path("golden/mini_stats.json"))));
  EXPECT_EQ(similar_status, 200);
}

TEST(Cli, SynthRunIsReproducible) {
  TempDir dir("cli-repro");
  for (const char* tag : {"a", "b"}) {
    const std::string t(tag);
    ASSERT_EQ(run({"synth", "--seed", "9", "--docs", "40", "--out", dir.file(t + ".jsonl")}).code, 0);
    ASSERT_EQ(run({"annotate", "--corpus", dir.file(t + ".jsonl"), "--mentions-out", dir.file(t + ".m")}).code, 0);
    ASSERT_EQ(run({"build-graph", "--corpus", dir.file(t + ".jsonl"), "--mentions", dir.file(t + ".m"), "--out",
                   dir.file(t + ".g")})
                  .code,
              0);
    ASSERT_EQ(run({"train", "--graph", dir.file(t + ".g"), "--epochs", "20", "--seed", "4", "--out", dir.file(t + ".bin")}).code,
              0);
    ASSERT_EQ(run({"eval", "--graph", dir.file(t + ".g"), "--model", dir.file(t + ".bin"), "--out", dir.file(t + ".eval")}).code,
              0);
  }
  for (const char* ext : {".jsonl", ".m", ".g", ".bin", ".eval"}) {
    EXPECT_EQ(slurp(dir.file(std::string("a") + ext)), slurp(dir.file(std::string("b") + ext))) << ext;
  }
}
