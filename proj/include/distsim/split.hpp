// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/pair_counts.hpp"

namespace distsim {

namespace detail {

/// Fisher-Yates with explicit index draws, so shuffles are reproducible
/// independent of the standard library in use.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace detail

/// A train table plus held-out occurrence folds.  Fold i serves once as
/// the test set, with the remaining folds merged for parameter tuning.
struct CorpusSplit {
  PairCounts train;
  std::vector<std::vector<PairOccurrence>> folds;
  std::uint64_t seed = 0;
  bool unseen_only = false;
  /// Set when unseen-only filtering removed every held-out candidate.
  bool all_candidates_seen = false;

  std::size_t num_folds() const { return folds.size(); }

  const std::vector<PairOccurrence>& test(std::size_t fold) const {
    if (fold >= folds.size()) throw DataError("fold index out of range");
    return folds[fold];
  }

  std::vector<PairOccurrence> tune(std::size_t fold) const {
    if (fold >= folds.size()) throw DataError("fold index out of range");
    std::vector<PairOccurrence> merged;
    for (std::size_t i = 0; i < folds.size(); ++i)
      if (i != fold) merged.insert(merged.end(), folds[i].begin(), folds[i].end());
    return merged;
  }

  std::vector<PairOccurrence> all_heldout() const {
    std::vector<PairOccurrence> merged;
    for (const auto& fold : folds) merged.insert(merged.end(), fold.begin(), fold.end());
    return merged;
  }
};

struct SplitOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  bool unseen_only = false;
  double train_fraction = 0.8;
};

/// Shuffle occurrences, carve off the training portion, and partition the
/// remainder round-robin into near-equal folds (sizes differ by at most
/// one).  In unseen-only mode, held-out occurrences of pairs present in
/// the training portion are dropped.
inline CorpusSplit split_corpus(const Vocabulary& vocab,
                                const std::vector<PairOccurrence>& occurrences,
                                const SplitOptions& options) {
  if (options.folds < 2) throw DataError("need at least two folds");
  if (options.train_fraction <= 0.0 || options.train_fraction >= 1.0)
    throw DataError("train fraction must lie strictly between 0 and 1");

  std::vector<PairOccurrence> shuffled = occurrences;
  std::mt19937_64 rng(options.seed);
  detail::seeded_shuffle(shuffled, rng);

  std::size_t train_n =
      static_cast<std::size_t>(options.train_fraction * static_cast<double>(shuffled.size()));
  std::vector<PairOccurrence> train_occ(shuffled.begin(),
                                        shuffled.begin() + static_cast<std::ptrdiff_t>(train_n));

  CorpusSplit split;
  split.seed = options.seed;
  split.unseen_only = options.unseen_only;
  split.train = counts_from_occurrences(vocab, train_occ);

  std::vector<PairOccurrence> candidates;
  for (std::size_t i = train_n; i < shuffled.size(); ++i) {
    const PairOccurrence& occ = shuffled[i];
    if (options.unseen_only && split.train.count(occ.object, occ.context) > 0) continue;
    candidates.push_back(occ);
  }

  split.folds.assign(options.folds, {});
  if (candidates.empty()) {
    split.all_candidates_seen = options.unseen_only;
    return split;
  }

  std::set<std::pair<ObjectId, ContextId>> distinct;
  for (const PairOccurrence& occ : candidates) distinct.insert({occ.object, occ.context});
  if (options.folds > distinct.size())
    throw DataError("folds (" + std::to_string(options.folds) +
                    ") exceed the number of distinct candidate pairs (" +
                    std::to_string(distinct.size()) + ")");

  for (std::size_t i = 0; i < candidates.size(); ++i)
    split.folds[i % options.folds].push_back(candidates[i]);
  return split;
}

}  // namespace distsim
