// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/divergence.hpp"
#include "distsim/model.hpp"
#include "distsim/pair_counts.hpp"
#include "distsim/parallel.hpp"
#include "distsim/split.hpp"

namespace distsim {

inline constexpr double kTieTolerance = 1e-12;

/// Pairing of contexts into two-way pseudo-words; every context belongs to
/// at most one pseudo-word.
class PseudowordMap {
 public:
  void add_pair(ContextId a, ContextId b) {
    if (lookup_.count(a) || lookup_.count(b))
      throw DataError("context already contributes to a pseudo-word");
    lookup_[a] = pairs_.size();
    lookup_[b] = pairs_.size();
    pairs_.emplace_back(a, b);
  }

  bool contains(ContextId y) const { return lookup_.count(y) != 0; }

  /// The other member of y's pseudo-word.
  ContextId partner(ContextId y) const {
    auto it = lookup_.find(y);
    if (it == lookup_.end())
      throw DataError("context id " + std::to_string(y) + " is not in any pseudo-word");
    const auto& [a, b] = pairs_[it->second];
    return y == a ? b : a;
  }

  const std::vector<std::pair<ContextId, ContextId>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

 private:
  std::vector<std::pair<ContextId, ContextId>> pairs_;
  std::unordered_map<ContextId, std::size_t> lookup_;
};

/// Pair contexts of similar frequency: sort by marginal count (descending)
/// with ties in seeded-shuffle order, then pair adjacent ranks.  An odd
/// leftover context is dropped.
inline PseudowordMap build_pseudowords(const PairCounts& counts, std::uint64_t seed) {
  std::vector<ContextId> contexts = counts.context_ids();
  if (contexts.size() < 2) throw DataError("need at least two contexts to build pseudo-words");
  std::mt19937_64 rng(seed);
  detail::seeded_shuffle(contexts, rng);
  std::stable_sort(contexts.begin(), contexts.end(), [&](ContextId a, ContextId b) {
    return counts.context_marginal(a) > counts.context_marginal(b);
  });
  PseudowordMap map;
  for (std::size_t i = 0; i + 1 < contexts.size(); i += 2)
    map.add_pair(contexts[i], contexts[i + 1]);
  return map;
}

struct ErrorRateReport {
  double error_rate = 0.0;
  std::size_t n = 0;
  std::size_t incorrect = 0;
  std::size_t ties = 0;
};

/// error = (#incorrect + #ties/2) / n, where each occurrence (x, y) is
/// scored by comparing the model on y against its pseudo-word foil; a tie
/// is equality within 1e-12.
inline ErrorRateReport disambiguation_error_rate(const ConditionalModel& model,
                                                 const std::vector<PairOccurrence>& test,
                                                 const PseudowordMap& map) {
  if (test.empty()) throw DataError("empty test set");
  ErrorRateReport report;
  report.n = test.size();
  for (const PairOccurrence& occ : test) {
    ContextId foil = map.partner(occ.context);
    double p_true = model.prob(occ.object, occ.context);
    double p_foil = model.prob(occ.object, foil);
    if (std::abs(p_true - p_foil) <= kTieTolerance)
      ++report.ties;
    else if (p_true < p_foil)
      ++report.incorrect;
  }
  report.error_rate = (static_cast<double>(report.incorrect) +
                       static_cast<double>(report.ties) / 2.0) /
                      static_cast<double>(report.n);
  return report;
}

struct PerplexityReport {
  double perplexity = 0.0;
  std::size_t n = 0;
  std::size_t zero_probability_events = 0;

  bool finite() const { return zero_probability_events == 0; }
};

/// PP = exp(-(1/n) sum log P(y_i | x_i)).  Events with zero probability
/// make the perplexity infinite; they are counted and flagged rather than
/// silently skipped.
inline PerplexityReport perplexity(const ConditionalModel& model,
                                   const std::vector<PairOccurrence>& test) {
  if (test.empty()) throw DataError("empty test set");
  PerplexityReport report;
  report.n = test.size();
  double log_sum = 0.0;
  for (const PairOccurrence& occ : test) {
    double p = model.prob(occ.object, occ.context);
    if (!(p > 0.0)) {
      ++report.zero_probability_events;
      continue;
    }
    log_sum += std::log(p);
  }
  report.perplexity = report.zero_probability_events > 0
                          ? kInfinity
                          : std::exp(-log_sum / static_cast<double>(report.n));
  return report;
}

/// Occurrences whose pair is absent from the reference table.
inline std::vector<PairOccurrence> unseen_occurrences(const std::vector<PairOccurrence>& test,
                                                      const PairCounts& reference) {
  std::vector<PairOccurrence> out;
  for (const PairOccurrence& occ : test)
    if (reference.count(occ.object, occ.context) == 0) out.push_back(occ);
  return out;
}

/// sum_x D(P_MLE(.|x) || model(.|x)), the coding loss of a model against
/// the training distributions.  Nats by default.
inline double aggregate_kl(const PairCounts& counts, const ConditionalModel& model,
                           LogBase base = LogBase::natural()) {
  double nats = 0.0;
  for (ObjectId x : counts.object_ids()) {
    double cx = static_cast<double>(counts.object_marginal(x));
    for (const auto& [y, c] : counts.row(x)) {
      double q = static_cast<double>(c) / cx;
      double r = model.prob(x, y);
      if (!(r > 0.0))
        throw DataError("model assigns zero probability where the data has mass (object " +
                        std::to_string(x) + ", context " + std::to_string(y) + ")");
      nats += q * std::log(q / r);
    }
  }
  return nats / base.ln_base;
}

// --- verb decision task -----------------------------------------------------

struct DecisionTriple {
  ObjectId x;
  ContextId y;        // the context whose pairs were deleted
  ContextId y_other;  // the foil
};

struct DecisionTask {
  PairCounts pruned_counts;  // training table with the chosen pairs deleted
  std::vector<PairOccurrence> deleted_pairs;
  std::vector<DecisionTriple> triples;
};

struct DecisionReport {
  double overall_error = 0.0;
  double exceptional_error = 0.0;
  std::size_t n = 0;
  std::size_t n_exceptional = 0;
  std::size_t disagreements = 0;
  std::size_t exceptional_disagreements = 0;
};

/// Compare the sign of log(model(y|x) / model(y'|x)) against the sign of
/// the pre-deletion empirical log ratio.  A triple is exceptional when the
/// pair-frequency log ratio and the marginal-frequency log ratio disagree
/// in sign; marginal-only estimators are consistently wrong there.
inline DecisionReport verb_decision_eval(const PairCounts& pre_deletion,
                                         const std::vector<PairOccurrence>& deleted_pairs,
                                         const ConditionalModel& model,
                                         const std::vector<DecisionTriple>& triples) {
  std::set<std::pair<ObjectId, ContextId>> deleted;
  for (const PairOccurrence& occ : deleted_pairs) deleted.insert({occ.object, occ.context});

  DecisionReport report;
  for (const DecisionTriple& triple : triples) {
    Count c_first = pre_deletion.count(triple.x, triple.y);
    Count c_other = pre_deletion.count(triple.x, triple.y_other);
    if (c_first == 0 || c_other == 0)
      throw DataError("confusion set references a pair unseen before deletion");
    if (c_first == c_other)
      throw DataError("confusion set with equal pre-deletion pair counts");
    if (!deleted.count({triple.x, triple.y}))
      throw DataError("confusion set references a pair that was not deleted");

    bool empirical_first = c_first > c_other;
    double p_first = model.prob(triple.x, triple.y);
    double p_other = model.prob(triple.x, triple.y_other);
    bool disagrees = empirical_first ? !(p_first > p_other) : !(p_other > p_first);

    Count m_first = pre_deletion.context_marginal(triple.y);
    Count m_other = pre_deletion.context_marginal(triple.y_other);
    bool exceptional = empirical_first ? !(m_first > m_other) : !(m_other > m_first);

    ++report.n;
    if (disagrees) ++report.disagreements;
    if (exceptional) {
      ++report.n_exceptional;
      if (disagrees) ++report.exceptional_disagreements;
    }
  }
  if (report.n == 0) throw DataError("empty decision test set");
  report.overall_error =
      static_cast<double>(report.disagreements) / static_cast<double>(report.n);
  report.exceptional_error =
      report.n_exceptional == 0
          ? 0.0
          : static_cast<double>(report.exceptional_disagreements) /
                static_cast<double>(report.n_exceptional);
  return report;
}

struct DecisionTaskOptions {
  std::size_t num_pairs = 20;
  Count freq_window_lo = 500;
  Count freq_window_hi = 5000;
  std::uint64_t seed = 0;
};

/// Build a decision task: pick pairs (x, y) whose context marginal falls
/// in the frequency window, delete all their occurrences from the table,
/// and form a confusion set {y, y'} per deleted pair where one context
/// occurred at least twice as often with x as the other (pre-deletion).
inline DecisionTask make_decision_task(const PairCounts& counts,
                                       const DecisionTaskOptions& options) {
  std::vector<std::pair<ObjectId, ContextId>> candidates;
  for (ObjectId x : counts.object_ids())
    for (const auto& [y, c] : counts.row(x)) {
      Count my = counts.context_marginal(y);
      if (my >= options.freq_window_lo && my <= options.freq_window_hi)
        candidates.emplace_back(x, y);
    }
  if (candidates.empty()) throw DataError("no pairs in the decision-task frequency window");

  std::mt19937_64 rng(options.seed);
  detail::seeded_shuffle(candidates, rng);

  DecisionTask task;
  std::set<std::pair<ObjectId, ContextId>> chosen;
  for (const auto& [x, y] : candidates) {
    if (task.triples.size() >= options.num_pairs) break;
    if (chosen.count({x, y})) continue;
    Count c_first = counts.count(x, y);
    // Foils: contexts seen with x where one count at least doubles the other.
    std::vector<ContextId> foils;
    for (const auto& [yp, c_other] : counts.row(x)) {
      if (yp == y || chosen.count({x, yp})) continue;
      if (c_first >= 2 * c_other || c_other >= 2 * c_first) foils.push_back(yp);
    }
    if (foils.empty()) continue;
    ContextId foil = foils[rng() % foils.size()];
    chosen.insert({x, y});
    task.triples.push_back({x, y, foil});
    task.deleted_pairs.push_back({x, y});
  }
  if (task.triples.empty()) throw DataError("no usable confusion sets in the frequency window");

  std::set<std::pair<ObjectId, ContextId>> to_delete;
  for (const PairOccurrence& occ : task.deleted_pairs)
    to_delete.insert({occ.object, occ.context});
  PairCounts::Builder builder(counts.vocab());
  for (ObjectId x : counts.object_ids())
    for (const auto& [y, c] : counts.row(x))
      if (!to_delete.count({x, y})) builder.add(x, y, c);
  task.pruned_counts = std::move(builder).build();
  return task;
}

// --- grid search ------------------------------------------------------------

template <typename Param>
struct GridSearchResult {
  Param best{};
  double best_objective = kInfinity;
  std::size_t best_index = 0;
  std::vector<std::pair<Param, double>> report;
};

/// Exhaustive argmin over a finite grid; ties go to the earliest grid
/// point.  The full per-point report is returned alongside the winner.
/// Points evaluate independently, in parallel when workers > 1 (the
/// objective must then be callable concurrently); the argmin scan runs in
/// grid order afterwards, so the result is worker-count independent.
template <typename Param, typename Objective>
GridSearchResult<Param> grid_search(const std::vector<Param>& grid, Objective&& objective,
                                    unsigned workers = 1) {
  if (grid.empty()) throw DataError("empty parameter grid");
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), workers,
               [&](std::size_t i) { values[i] = objective(grid[i]); });
  GridSearchResult<Param> result;
  result.report.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    result.report.emplace_back(grid[i], values[i]);
    if (i == 0 || values[i] < result.best_objective) {
      result.best = grid[i];
      result.best_objective = values[i];
      result.best_index = i;
    }
  }
  return result;
}

}  // namespace distsim
