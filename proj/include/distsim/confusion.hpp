// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/pair_counts.hpp"

namespace distsim {

/// Context-major view of a pair table: for each context y, the objects
/// observed with it.  Shares the PairCounts lifetime.
class ContextIndex {
 public:
  explicit ContextIndex(const PairCounts& counts) : by_context_(counts.vocab().size()) {
    for (ObjectId x : counts.object_ids())
      for (const auto& [y, c] : counts.row(x)) by_context_[y].emplace_back(x, c);
  }

  const std::vector<std::pair<ObjectId, Count>>& objects_with(ContextId y) const {
    static const std::vector<std::pair<ObjectId, Count>> kEmpty;
    return y < by_context_.size() ? by_context_[y] : kEmpty;
  }

 private:
  std::vector<std::vector<std::pair<ObjectId, Count>>> by_context_;
};

/// P_C(x'|x) = sum_y P(x|y) P(x'|y) P(y) / P(x), all quantities MLE, which
/// reduces to sum_y C(x,y) C(x',y) / (C(y) C(x)) over shared contexts.
inline double confusion_probability(const PairCounts& counts, ObjectId x, ObjectId x_prime) {
  Count cx = counts.object_marginal(x);
  if (cx == 0) throw DataError("confusion probability conditioned on P(x) = 0");
  const auto& xs = counts.row(x);
  const auto& ps = counts.row(x_prime);
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ps.size()) {
    if (xs[i].first < ps[j].first) {
      ++i;
    } else if (ps[j].first < xs[i].first) {
      ++j;
    } else {
      ContextId y = xs[i].first;
      sum += static_cast<double>(xs[i].second) * static_cast<double>(ps[j].second) /
             (static_cast<double>(counts.context_marginal(y)) * static_cast<double>(cx));
      ++i;
      ++j;
    }
  }
  return sum;
}

/// One full confusion row, sparse over objects sharing a context with x,
/// sorted by object id.  Rows sum to one.
inline std::vector<std::pair<ObjectId, double>> confusion_row(const PairCounts& counts,
                                                              const ContextIndex& index,
                                                              ObjectId x) {
  Count cx = counts.object_marginal(x);
  if (cx == 0) throw DataError("confusion probability conditioned on P(x) = 0");
  std::vector<std::pair<ObjectId, double>> row;
  std::vector<double> acc;  // scratch keyed by object id
  acc.assign(counts.vocab().size(), 0.0);
  std::vector<ObjectId> touched;
  for (const auto& [y, cxy] : counts.row(x)) {
    double denom = static_cast<double>(counts.context_marginal(y)) * static_cast<double>(cx);
    for (const auto& [xp, cxpy] : index.objects_with(y)) {
      if (acc[xp] == 0.0) touched.push_back(xp);
      acc[xp] += static_cast<double>(cxy) * static_cast<double>(cxpy) / denom;
    }
  }
  std::sort(touched.begin(), touched.end());
  row.reserve(touched.size());
  for (ObjectId xp : touched) row.emplace_back(xp, acc[xp]);
  return row;
}

}  // namespace distsim
