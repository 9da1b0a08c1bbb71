// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/vocabulary.hpp"

namespace distsim {

/// One event (x, y).  Test and tuning sets keep occurrence lists rather
/// than collapsed counts so that repeated pairs carry their multiplicity.
struct PairOccurrence {
  ObjectId object;
  ContextId context;

  bool operator==(const PairOccurrence&) const = default;
};

/// Immutable sparse cooccurrence table C(x, y) with marginals and total.
/// Objects and contexts share one vocabulary; an id is "active" on a side
/// when its marginal there is positive.
class PairCounts {
 public:
  using Row = std::vector<std::pair<ContextId, Count>>;

  PairCounts() = default;

  const Vocabulary& vocab() const { return vocab_; }

  Count count(ObjectId x, ContextId y) const {
    if (x >= rows_.size()) return 0;
    const Row& row = rows_[x];
    auto it = std::lower_bound(row.begin(), row.end(), y,
                               [](const auto& cell, ContextId key) { return cell.first < key; });
    if (it == row.end() || it->first != y) return 0;
    return it->second;
  }

  /// Seen contexts of x with their counts, sorted by context id.
  const Row& row(ObjectId x) const {
    static const Row kEmpty;
    return x < rows_.size() ? rows_[x] : kEmpty;
  }

  Count object_marginal(ObjectId x) const {
    return x < object_marginals_.size() ? object_marginals_[x] : 0;
  }
  Count context_marginal(ContextId y) const {
    return y < context_marginals_.size() ? context_marginals_[y] : 0;
  }
  Count total() const { return total_; }

  /// Ids with positive object marginal, ascending.
  const std::vector<ObjectId>& object_ids() const { return object_ids_; }
  /// Ids with positive context marginal, ascending.
  const std::vector<ContextId>& context_ids() const { return context_ids_; }

  std::size_t num_objects() const { return object_ids_.size(); }
  std::size_t num_contexts() const { return context_ids_.size(); }
  std::size_t num_pairs() const { return num_pairs_; }

  /// P(y) = C(y) / N over the context side.
  double unigram(ContextId y) const {
    if (total_ == 0) throw DataError("unigram over empty counts");
    return static_cast<double>(context_marginal(y)) / static_cast<double>(total_);
  }

  bool operator==(const PairCounts& other) const {
    return vocab_ == other.vocab_ && rows_ == other.rows_ && total_ == other.total_;
  }

  /// Accumulates cells, then freezes into an immutable table.
  class Builder {
   public:
    Builder() = default;
    explicit Builder(Vocabulary vocab) : vocab_(std::move(vocab)) {}

    Vocabulary& vocab() { return vocab_; }

    void add(ObjectId x, ContextId y, Count c) {
      if (c == 0) throw DataError("pair count must be positive");
      cells_[{x, y}] += c;
    }

    void add_surface(std::string_view object, std::string_view context, Count c) {
      ObjectId x = vocab_.intern(object);
      ContextId y = vocab_.intern(context);
      add(x, y, c);
    }

    PairCounts build() && {
      PairCounts out;
      out.vocab_ = std::move(vocab_);
      std::size_t n = out.vocab_.size();
      out.rows_.resize(n);
      out.object_marginals_.assign(n, 0);
      out.context_marginals_.assign(n, 0);
      for (const auto& [key, c] : cells_) {
        auto [x, y] = key;
        if (x >= n || y >= n) throw DataError("pair id outside vocabulary");
        out.rows_[x].emplace_back(y, c);
        out.object_marginals_[x] += c;
        out.context_marginals_[y] += c;
        out.total_ += c;
        ++out.num_pairs_;
      }
      for (WordId id = 0; id < n; ++id) {
        if (out.object_marginals_[id] > 0) out.object_ids_.push_back(id);
        if (out.context_marginals_[id] > 0) out.context_ids_.push_back(id);
      }
      return out;
    }

   private:
    Vocabulary vocab_;
    std::map<std::pair<ObjectId, ContextId>, Count> cells_;
  };

 private:
  Vocabulary vocab_;
  std::vector<Row> rows_;
  std::vector<Count> object_marginals_;
  std::vector<Count> context_marginals_;
  std::vector<ObjectId> object_ids_;
  std::vector<ContextId> context_ids_;
  Count total_ = 0;
  std::size_t num_pairs_ = 0;
};

inline PairCounts counts_from_occurrences(const Vocabulary& vocab,
                                          const std::vector<PairOccurrence>& occurrences) {
  PairCounts::Builder builder(vocab);
  for (const PairOccurrence& occ : occurrences) builder.add(occ.object, occ.context, 1);
  return std::move(builder).build();
}

}  // namespace distsim
