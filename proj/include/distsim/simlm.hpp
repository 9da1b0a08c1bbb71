// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/estimators.hpp"
#include "distsim/model.hpp"
#include "distsim/neighbors.hpp"
#include "distsim/pair_counts.hpp"

namespace distsim {

/// Which per-neighbor distribution backs P(y|x') in the similarity sum.
/// Bound to the measure: KL retrieval runs on smoothed rows, the others on
/// plain MLE rows.
enum class NeighborRowMode { kMle, kSmoothed };

inline NeighborRowMode row_mode_for(Measure measure) {
  return measure == Measure::kKL ? NeighborRowMode::kSmoothed : NeighborRowMode::kMle;
}

/// Katz back-off with the similarity redistribution
///   P_r(y|x) = gamma P(y) + (1 - gamma) P_SIM(y|x),
///   P_SIM(y|x) = sum_{x' in S(x)} [W(x,x') / sum W] P(y|x'),
/// and alpha(x) recomputed per object against this P_r.  Seen pairs keep
/// the base discounted estimate untouched.
///
/// Objects whose neighbor row is empty fall back to the unigram, which is
/// the gamma = 1 behavior for that object.
class SimBackoffModel : public ConditionalModel {
 public:
  SimBackoffModel(const PairCounts& counts, const BackoffModel& base,
                  const NeighborGraph& graph, double gamma)
      : counts_(&counts),
        base_(&base),
        graph_(graph),
        gamma_(gamma),
        mode_(row_mode_for(graph.params().measure)) {
    if (gamma_ < 0.0 || gamma_ > 1.0) throw DataError("gamma must lie in [0, 1]");
    std::size_t n = counts.vocab().size();
    sum_weights_.assign(n, 0.0);
    alpha_.assign(n, 0.0);
    fallback_.assign(n, 1);
    for (ObjectId x : base.object_ids()) {
      double sum_w = 0.0;
      for (const NeighborEntry& e : graph.row(x)) sum_w += e.weight;
      sum_weights_[x] = sum_w;
      fallback_[x] = sum_w > 0.0 ? 0 : 1;

      double seen_unigram = 0.0;
      for (const auto& [y, pd] : base.discounted_row(x)) seen_unigram += base.unigram(y);
      double seen_redistribution;
      if (fallback_[x]) {
        seen_redistribution = seen_unigram;
      } else {
        double seen_sim = 0.0;
        for (const NeighborEntry& e : graph.row(x))
          seen_sim += (e.weight / sum_w) * neighbor_mass_on_seen(x, e.neighbor);
        seen_redistribution = gamma_ * seen_unigram + (1.0 - gamma_) * seen_sim;
      }
      alpha_[x] = BackoffModel::compute_alpha(base.leftover_mass(x), 1.0 - seen_redistribution,
                                              "object '" + counts.vocab().surface(x) + "'");
    }
  }

  /// P_SIM(y|x); empty when S(x) is empty (unigram fallback applies).
  std::optional<double> p_sim(ObjectId x, ContextId y) const {
    check_object(x);
    if (fallback_[x]) return std::nullopt;
    double p = 0.0;
    for (const NeighborEntry& e : graph_.row(x))
      p += (e.weight / sum_weights_[x]) * neighbor_prob(e.neighbor, y);
    return p;
  }

  /// The active redistribution model P_r(y|x).
  double p_redistribute(ObjectId x, ContextId y) const {
    check_object(x);
    double unigram = base_->unigram(y);
    if (fallback_[x]) return unigram;
    return gamma_ * unigram + (1.0 - gamma_) * *p_sim(x, y);
  }

  double prob(ObjectId x, ContextId y) const override {
    const auto& row = base_->discounted_row(x);
    auto it = std::lower_bound(row.begin(), row.end(), y,
                               [](const auto& e, ContextId key) { return e.first < key; });
    if (it != row.end() && it->first == y) return it->second;
    return alpha_[x] * p_redistribute(x, y);
  }

  double alpha(ObjectId x) const {
    check_object(x);
    return alpha_[x];
  }
  bool unigram_fallback(ObjectId x) const {
    check_object(x);
    return fallback_[x] != 0;
  }
  double gamma() const { return gamma_; }
  NeighborRowMode mode() const { return mode_; }
  const BackoffModel& base() const { return *base_; }
  const NeighborGraph& graph() const { return graph_; }

 private:
  void check_object(ObjectId x) const {
    if (x >= sum_weights_.size())
      throw DataError("unknown object id " + std::to_string(x));
  }

  double neighbor_prob(ObjectId xp, ContextId y) const {
    if (mode_ == NeighborRowMode::kSmoothed) return base_->prob(xp, y);
    return static_cast<double>(counts_->count(xp, y)) /
           static_cast<double>(counts_->object_marginal(xp));
  }

  /// sum over x's seen contexts of P(y|x') for one neighbor.
  double neighbor_mass_on_seen(ObjectId x, ObjectId xp) const {
    double sum = 0.0;
    if (mode_ == NeighborRowMode::kSmoothed) {
      for (const auto& [y, pd] : base_->discounted_row(x)) sum += base_->prob(xp, y);
    } else {
      double cxp = static_cast<double>(counts_->object_marginal(xp));
      const auto& seen = base_->discounted_row(x);
      const auto& row = counts_->row(xp);
      std::size_t i = 0, j = 0;
      while (i < seen.size() && j < row.size()) {
        if (seen[i].first < row[j].first) {
          ++i;
        } else if (row[j].first < seen[i].first) {
          ++j;
        } else {
          sum += static_cast<double>(row[j].second) / cxp;
          ++i;
          ++j;
        }
      }
    }
    return sum;
  }

  const PairCounts* counts_;
  const BackoffModel* base_;
  NeighborGraph graph_;
  double gamma_;
  NeighborRowMode mode_;
  std::vector<double> sum_weights_;
  std::vector<double> alpha_;
  std::vector<char> fallback_;
};

}  // namespace distsim
