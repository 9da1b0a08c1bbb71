// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/pair_counts.hpp"

namespace distsim {

/// A probability mass function over context ids with sparse support:
/// entries sorted by id, strictly positive, summing to one.
class SparseDistribution {
 public:
  using Entry = std::pair<ContextId, double>;

  SparseDistribution() = default;

  explicit SparseDistribution(std::vector<Entry> entries, bool renormalize = false) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    double mass = 0.0;
    support_.reserve(entries.size());
    for (const Entry& e : entries) {
      if (e.second < 0.0 || !std::isfinite(e.second))
        throw DataError("distribution entry must be finite and nonnegative");
      if (e.second == 0.0) continue;
      if (!support_.empty() && support_.back().first == e.first)
        throw DataError("duplicate context id in distribution");
      support_.push_back(e);
      mass += e.second;
    }
    if (renormalize) {
      if (mass <= 0.0) throw DataError("cannot normalize an all-zero distribution");
      for (Entry& e : support_) e.second /= mass;
    } else if (std::abs(mass - 1.0) > 1e-9) {
      throw DataError("distribution mass " + std::to_string(mass) + " is not 1");
    }
    double sq = 0.0;
    for (const Entry& e : support_) sq += e.second * e.second;
    l2_norm_ = std::sqrt(sq);
  }

  const std::vector<Entry>& support() const { return support_; }
  std::size_t size() const { return support_.size(); }
  bool empty() const { return support_.empty(); }

  double prob(ContextId y) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), y,
                               [](const Entry& e, ContextId key) { return e.first < key; });
    if (it == support_.end() || it->first != y) return 0.0;
    return it->second;
  }

  double mass() const {
    double m = 0.0;
    for (const Entry& e : support_) m += e.second;
    return m;
  }

  /// Euclidean norm, cached so cosine comparisons do not rescan supports.
  double l2_norm() const { return l2_norm_; }

  bool operator==(const SparseDistribution& other) const { return support_ == other.support_; }

 private:
  std::vector<Entry> support_;
  double l2_norm_ = 0.0;
};

/// P_MLE(. | x) as a sparse distribution.
inline SparseDistribution mle_row(const PairCounts& counts, ObjectId x) {
  Count cx = counts.object_marginal(x);
  if (cx == 0) throw DataError("object has zero marginal; no MLE distribution");
  std::vector<SparseDistribution::Entry> entries;
  entries.reserve(counts.row(x).size());
  for (const auto& [y, c] : counts.row(x))
    entries.emplace_back(y, static_cast<double>(c) / static_cast<double>(cx));
  return SparseDistribution(std::move(entries));
}

inline SparseDistribution uniform_distribution(const std::vector<ContextId>& ids) {
  if (ids.empty()) throw DataError("uniform distribution over empty set");
  std::vector<SparseDistribution::Entry> entries;
  entries.reserve(ids.size());
  for (ContextId y : ids) entries.emplace_back(y, 1.0 / static_cast<double>(ids.size()));
  return SparseDistribution(std::move(entries));
}

}  // namespace distsim
