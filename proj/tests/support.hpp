#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <lkg/lkg.hpp>

namespace lkg::testing {

inline std::string data_path(const std::string& name) { return std::string(LKG_DATA_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lkg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

inline Document make_doc(std::string id, std::string body = "", std::string court = "",
                         DocType type = DocType::kCase) {
  Document d;
  d.id = std::move(id);
  d.title = d.id;
  d.court = std::move(court);
  d.doc_type = type;
  d.body = std::move(body);
  return d;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

inline EdgeList random_edges(std::size_t n_nodes, std::size_t n_edges, Rng& rng) {
  EdgeList out;
  for (std::size_t i = 0; i < n_edges; ++i) out.push_back({rng.below(n_nodes), rng.below(n_nodes)});
  return out;
}

/// Mean top-n overlap between planted and fitted topics under the best one-to-one
/// matching, found by trying every permutation.
inline double planted_topic_overlap(const PlantedTruth& truth, const TopicModel& model, std::size_t n = 10) {
  const std::size_t K = truth.phi.size();
  std::vector<std::set<std::string>> planted(K), fitted(model.K);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::size_t> idx(truth.vocab.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return truth.phi[k][a] > truth.phi[k][b]; });
    for (std::size_t i = 0; i < n && i < idx.size(); ++i) planted[k].insert(truth.vocab[idx[i]]);
  }
  for (std::size_t k = 0; k < model.K; ++k) {
    std::vector<std::size_t> idx(model.vocab.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return model.phi[k][a] > model.phi[k][b]; });
    for (std::size_t i = 0; i < n && i < idx.size(); ++i) fitted[k].insert(model.vocab[idx[i]]);
  }
  std::vector<std::size_t> perm(model.K);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  double best = 0.0;
  do {
    double total = 0.0;
    for (std::size_t k = 0; k < K && k < perm.size(); ++k) {
      std::size_t shared = 0;
      for (const auto& w : planted[k]) shared += fitted[perm[k]].count(w);
      total += static_cast<double>(shared) / static_cast<double>(n);
    }
    best = std::max(best, total / static_cast<double>(K));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Worst elementwise relative error per parameter block between analytic gradients and
/// central differences of loss_only; the denominator is floored at `floor`.
inline std::map<std::string, double> gradient_check(const RgcnModel& model, const MessageGraph& graph,
                                                    const Matrix& x, const std::string& task, const EdgeList& pos,
                                                    const EdgeList& neg, double eps = 1e-5, double floor = 1e-6) {
  const auto analytic = loss_and_grads(model, graph, x, task, pos, neg).grads;
  std::vector<std::pair<std::string, const Matrix*>> grads;
  analytic.for_each_param([&](const std::string& name, const Matrix& g) { grads.emplace_back(name, &g); });
  std::map<std::string, double> worst;
  RgcnModel probe = model;
  std::size_t block = 0;
  probe.for_each_param([&](const std::string& name, Matrix& p) {
    const Matrix& g = *grads[block++].second;
    double& w = worst[name];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double keep = p.data[i];
      p.data[i] = keep + eps;
      const double up = loss_only(probe, graph, x, task, pos, neg);
      p.data[i] = keep - eps;
      const double down = loss_only(probe, graph, x, task, pos, neg);
      p.data[i] = keep;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(numeric), std::abs(g.data[i]), floor});
      w = std::max(w, std::abs(numeric - g.data[i]) / denom);
    }
  });
  return worst;
}

} // namespace lkg::testing
