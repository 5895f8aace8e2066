#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"

namespace lkg {

/// Mann-Whitney ROC-AUC with ties counted half, via one sort and midranks.
inline double roc_auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw UsageError("roc_auc: positive and negative score lists must be nonempty");
  const std::size_t n = pos.size() + neg.size();
  std::vector<std::pair<double, bool>> all;
  all.reserve(n);
  for (const double s : pos) all.emplace_back(s, true);
  for (const double s : neg) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Sum of positive ranks, doubled so midranks stay integral.
  unsigned long long twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::size_t positives = 0;
    while (j < n && all[j].first == all[i].first) positives += all[j++].second ? 1 : 0;
    twice_rank_sum += positives * (i + 1 + j); // midrank of ranks i+1..j is (i+1+j)/2
    i = j;
  }
  const double p = static_cast<double>(pos.size());
  const double q = static_cast<double>(neg.size());
  const double twice_u = static_cast<double>(twice_rank_sum) - p * (p + 1.0);
  return twice_u / (2.0 * p * q);
}

/// Brute-force pair count; O(P * N).
inline double auc_oracle(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw UsageError("auc_oracle: positive and negative score lists must be nonempty");
  double wins = 0.0;
  for (const double p : pos) {
    for (const double q : neg) wins += p > q ? 1.0 : (p == q ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

} // namespace lkg
