// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/corpus_io.hpp"
#include "distsim/model.hpp"
#include "distsim/pair_counts.hpp"
#include "distsim/sparse_distribution.hpp"

namespace distsim {

/// P_MLE(y|x) = C(x,y) / C(x); zero for unseen pairs.
class MleModel : public ConditionalModel {
 public:
  explicit MleModel(const PairCounts& counts) : counts_(&counts) {}

  double prob(ObjectId x, ContextId y) const override {
    if (x >= counts_->vocab().size()) throw DataError("unknown object id");
    Count cx = counts_->object_marginal(x);
    if (cx == 0) throw DataError("MLE conditioned on object with zero marginal");
    return static_cast<double>(counts_->count(x, y)) / static_cast<double>(cx);
  }

  const PairCounts& counts() const { return *counts_; }

 private:
  const PairCounts* counts_;
};

inline double mle_conditional(const PairCounts& counts, ObjectId x, ContextId y) {
  return MleModel(counts).prob(x, y);
}

/// lambda(x) as a step function of the object count C(x): the bucket with
/// the largest threshold <= C(x) applies.
class LambdaSchedule {
 public:
  static LambdaSchedule constant(double lambda) {
    LambdaSchedule s;
    s.set_bucket(0, lambda);
    return s;
  }

  void set_bucket(Count min_count, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw DataError("lambda must lie in [0, 1]");
    buckets_[min_count] = lambda;
  }

  double lambda_for(Count object_count) const {
    if (buckets_.empty()) throw DataError("empty lambda schedule");
    auto it = buckets_.upper_bound(object_count);
    if (it == buckets_.begin())
      throw DataError("no lambda bucket covers count " + std::to_string(object_count));
    return std::prev(it)->second;
  }

 private:
  std::map<Count, double> buckets_;
};

/// P_JM(y|x) = lambda(x) P_MLE(y|x) + (1 - lambda(x)) P_MLE(y).
class JelinekMercerModel : public ConditionalModel {
 public:
  JelinekMercerModel(const PairCounts& counts, LambdaSchedule lambda)
      : counts_(&counts), lambda_(std::move(lambda)) {}

  double prob(ObjectId x, ContextId y) const override {
    if (x >= counts_->vocab().size()) throw DataError("unknown object id");
    Count cx = counts_->object_marginal(x);
    if (cx == 0) throw DataError("Jelinek-Mercer conditioned on object with zero marginal");
    double l = lambda_.lambda_for(cx);
    double mle = static_cast<double>(counts_->count(x, y)) / static_cast<double>(cx);
    return l * mle + (1.0 - l) * counts_->unigram(y);
  }

 private:
  const PairCounts* counts_;
  LambdaSchedule lambda_;
};

/// Counts-of-counts n_m with the Good-Turing discount
/// C*(c) = (c+1) n_{c+1} / n_c applied below the ceiling k_GT; above it, or
/// whenever n_c or n_{c+1} vanishes, the raw count is kept.  The discounted
/// count is capped at the raw count: on noisy tables the raw formula can
/// exceed c, which would push the seen mass of an object past one.
class GoodTuringTable {
 public:
  GoodTuringTable() = default;

  static GoodTuringTable from_counts(const PairCounts& counts, Count ceiling = 5) {
    GoodTuringTable table;
    table.ceiling_ = ceiling;
    for (ObjectId x : counts.object_ids())
      for (const auto& [y, c] : counts.row(x)) ++table.counts_of_counts_[c];
    std::uint64_t cells =
        static_cast<std::uint64_t>(counts.num_objects()) * counts.num_contexts();
    table.n0_ = cells - counts.num_pairs();
    return table;
  }

  double discounted(Count c) const {
    if (c < 1) throw DataError("Good-Turing discount of a zero count");
    if (c >= ceiling_) return static_cast<double>(c);
    Count n_c = count_of_count(c);
    Count n_next = count_of_count(c + 1);
    if (n_c == 0 || n_next == 0) return static_cast<double>(c);
    double discounted =
        static_cast<double>(c + 1) * static_cast<double>(n_next) / static_cast<double>(n_c);
    return std::min(discounted, static_cast<double>(c));
  }

  Count count_of_count(Count m) const {
    auto it = counts_of_counts_.find(m);
    return it == counts_of_counts_.end() ? 0 : it->second;
  }

  Count ceiling() const { return ceiling_; }
  Count unseen_cells() const { return n0_; }
  const std::map<Count, Count>& counts_of_counts() const { return counts_of_counts_; }

  static GoodTuringTable restore(std::map<Count, Count> counts_of_counts, Count ceiling,
                                 Count n0 = 0) {
    GoodTuringTable table;
    table.counts_of_counts_ = std::move(counts_of_counts);
    table.ceiling_ = ceiling;
    table.n0_ = n0;
    return table;
  }

 private:
  std::map<Count, Count> counts_of_counts_;
  Count ceiling_ = 5;
  Count n0_ = 0;
};

struct BackoffOptions {
  Count gt_ceiling = 5;
  /// Rebuild over the table with count-1 pairs removed, so singletons are
  /// treated as unseen events.
  bool singletons_as_unseen = false;
};

/// Katz back-off over pairs: discounted MLE for seen pairs, and
/// alpha(x) P_r(y|x) for unseen ones, with the default redistribution
/// P_r(y|x) = P(y).  alpha uses the formulation
/// alpha(x) = leftover(x) / (1 - sum_{y seen with x} P_r(y|x)).
///
/// Self-contained after construction: queries need no PairCounts.
class BackoffModel : public ConditionalModel {
 public:
  using Row = std::vector<std::pair<ContextId, double>>;

  BackoffModel() = default;

  static BackoffModel build(const PairCounts& source, const BackoffOptions& options = {}) {
    PairCounts filtered;
    const PairCounts* counts = &source;
    if (options.singletons_as_unseen) {
      filtered = filter_singletons(source);
      counts = &filtered;
    }
    BackoffModel model;
    model.options_ = options;
    model.gt_ = GoodTuringTable::from_counts(*counts, options.gt_ceiling);
    std::size_t n = counts->vocab().size();
    model.rows_.resize(n);
    model.leftover_.assign(n, 0.0);
    model.alpha_.assign(n, 0.0);
    model.unigram_.assign(n, 0.0);
    model.object_ids_ = counts->object_ids();
    model.context_ids_ = counts->context_ids();
    for (ContextId y : model.context_ids_) model.unigram_[y] = counts->unigram(y);
    for (ObjectId x : model.object_ids_) {
      double cx = static_cast<double>(counts->object_marginal(x));
      Row& row = model.rows_[x];
      double seen_mass = 0.0;
      double seen_unigram = 0.0;
      row.reserve(counts->row(x).size());
      for (const auto& [y, c] : counts->row(x)) {
        double pd = model.gt_.discounted(c) / cx;
        row.emplace_back(y, pd);
        seen_mass += pd;
        seen_unigram += model.unigram_[y];
      }
      double leftover = 1.0 - seen_mass;
      leftover = std::clamp(leftover, 0.0, 1.0);
      model.leftover_[x] = leftover;
      model.alpha_[x] = compute_alpha(leftover, 1.0 - seen_unigram,
                                      "object '" + counts->vocab().surface(x) + "'");
    }
    return model;
  }

  /// Shared rule for alpha(x) = leftover / redistribution-mass-off-seen.
  static double compute_alpha(double leftover, double unseen_redistribution,
                              const std::string& what) {
    if (leftover <= kMassTolerance) return 0.0;
    if (unseen_redistribution <= kMassTolerance)
      throw DegenerateRedistribution("all redistribution mass on seen contexts for " + what +
                                     " (leftover " + std::to_string(leftover) + ")");
    return leftover / unseen_redistribution;
  }

  double prob(ObjectId x, ContextId y) const override {
    const Row* row = seen_row(x);
    auto it = std::lower_bound(row->begin(), row->end(), y,
                               [](const auto& e, ContextId key) { return e.first < key; });
    if (it != row->end() && it->first == y) return it->second;
    return alpha_[x] * unigram(y);
  }

  bool seen(ObjectId x, ContextId y) const {
    const Row* row = seen_row(x);
    auto it = std::lower_bound(row->begin(), row->end(), y,
                               [](const auto& e, ContextId key) { return e.first < key; });
    return it != row->end() && it->first == y;
  }

  /// P_d(y|x) entries for the seen contexts of x, sorted by context id.
  const Row& discounted_row(ObjectId x) const { return *seen_row(x); }

  double leftover_mass(ObjectId x) const {
    check_object(x);
    return leftover_[x];
  }
  double alpha(ObjectId x) const {
    check_object(x);
    return alpha_[x];
  }
  double unigram(ContextId y) const { return y < unigram_.size() ? unigram_[y] : 0.0; }

  const std::vector<ObjectId>& object_ids() const { return object_ids_; }
  const std::vector<ContextId>& context_ids() const { return context_ids_; }
  const GoodTuringTable& good_turing() const { return gt_; }
  const BackoffOptions& options() const { return options_; }

  /// Full smoothed row over the active contexts, as a distribution.
  SparseDistribution smoothed_row(ObjectId x) const {
    check_object(x);
    std::vector<SparseDistribution::Entry> entries;
    entries.reserve(context_ids_.size());
    const Row& row = rows_[x];
    std::size_t i = 0;
    for (ContextId y : context_ids_) {
      while (i < row.size() && row[i].first < y) ++i;
      if (i < row.size() && row[i].first == y)
        entries.emplace_back(y, row[i].second);
      else
        entries.emplace_back(y, alpha_[x] * unigram_[y]);
    }
    return SparseDistribution(std::move(entries), /*renormalize=*/true);
  }

  bool operator==(const BackoffModel& other) const {
    return rows_ == other.rows_ && leftover_ == other.leftover_ && alpha_ == other.alpha_ &&
           unigram_ == other.unigram_;
  }

  void save(std::ostream& out) const;
  static BackoffModel load(std::istream& in);

  static constexpr double kMassTolerance = 1e-12;

 private:
  const Row* seen_row(ObjectId x) const {
    check_object(x);
    return &rows_[x];
  }

  void check_object(ObjectId x) const {
    if (x >= rows_.size() || !std::binary_search(object_ids_.begin(), object_ids_.end(), x))
      throw DataError("back-off model has no estimate for object id " + std::to_string(x));
  }

  std::vector<Row> rows_;
  std::vector<double> leftover_;
  std::vector<double> alpha_;
  std::vector<double> unigram_;
  std::vector<ObjectId> object_ids_;
  std::vector<ContextId> context_ids_;
  GoodTuringTable gt_;
  BackoffOptions options_;
};

inline double katz_prob(const BackoffModel& model, ObjectId x, ContextId y) {
  return model.prob(x, y);
}

inline double good_turing_discount(const GoodTuringTable& table, Count c) {
  return table.discounted(c);
}

// --- serialization (versioned; round-trips bit-exactly) -------------------

namespace detail {

inline constexpr char kModelMagic[4] = {'D', 'S', 'B', 'O'};
inline constexpr std::uint32_t kModelVersion = 1;

}  // namespace detail

inline void BackoffModel::save(std::ostream& out) const {
  out.write(detail::kModelMagic, 4);
  detail::write_raw(out, detail::kModelVersion);
  detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(rows_.size()));
  detail::write_raw<std::uint8_t>(out, options_.singletons_as_unseen ? 1 : 0);
  detail::write_raw<std::uint64_t>(out, options_.gt_ceiling);
  detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(object_ids_.size()));
  for (ObjectId x : object_ids_) detail::write_raw<std::uint32_t>(out, x);
  detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(context_ids_.size()));
  for (ContextId y : context_ids_) detail::write_raw<std::uint32_t>(out, y);
  for (ObjectId x : object_ids_) {
    const Row& row = rows_[x];
    detail::write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(row.size()));
    for (const auto& [y, p] : row) {
      detail::write_raw<std::uint32_t>(out, y);
      detail::write_raw<double>(out, p);
    }
    detail::write_raw<double>(out, leftover_[x]);
    detail::write_raw<double>(out, alpha_[x]);
  }
  for (ContextId y : context_ids_) detail::write_raw<double>(out, unigram_[y]);
  detail::write_raw<std::uint32_t>(out,
                                   static_cast<std::uint32_t>(gt_.counts_of_counts().size()));
  for (const auto& [m, n] : gt_.counts_of_counts()) {
    detail::write_raw<std::uint64_t>(out, m);
    detail::write_raw<std::uint64_t>(out, n);
  }
}

inline BackoffModel BackoffModel::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, detail::kModelMagic))
    throw DataError("not a back-off model file");
  auto version = detail::read_raw<std::uint32_t>(in);
  if (version != detail::kModelVersion)
    throw DataError("unsupported model file version " + std::to_string(version));
  BackoffModel model;
  auto vocab_size = detail::read_raw<std::uint32_t>(in);
  model.options_.singletons_as_unseen = detail::read_raw<std::uint8_t>(in) != 0;
  model.options_.gt_ceiling = detail::read_raw<std::uint64_t>(in);
  model.rows_.resize(vocab_size);
  model.leftover_.assign(vocab_size, 0.0);
  model.alpha_.assign(vocab_size, 0.0);
  model.unigram_.assign(vocab_size, 0.0);
  auto num_objects = detail::read_raw<std::uint32_t>(in);
  model.object_ids_.resize(num_objects);
  for (auto& x : model.object_ids_) x = detail::read_raw<std::uint32_t>(in);
  auto num_contexts = detail::read_raw<std::uint32_t>(in);
  model.context_ids_.resize(num_contexts);
  for (auto& y : model.context_ids_) y = detail::read_raw<std::uint32_t>(in);
  for (ObjectId x : model.object_ids_) {
    auto row_size = detail::read_raw<std::uint32_t>(in);
    Row& row = model.rows_[x];
    row.resize(row_size);
    for (auto& [y, p] : row) {
      y = detail::read_raw<std::uint32_t>(in);
      p = detail::read_raw<double>(in);
    }
    model.leftover_[x] = detail::read_raw<double>(in);
    model.alpha_[x] = detail::read_raw<double>(in);
  }
  for (ContextId y : model.context_ids_) model.unigram_[y] = detail::read_raw<double>(in);
  auto cc_size = detail::read_raw<std::uint32_t>(in);
  std::map<Count, Count> cc;
  for (std::uint32_t i = 0; i < cc_size; ++i) {
    auto m = detail::read_raw<std::uint64_t>(in);
    auto n = detail::read_raw<std::uint64_t>(in);
    cc.emplace(m, n);
  }
  model.gt_ = GoodTuringTable::restore(std::move(cc), model.options_.gt_ceiling);
  return model;
}

}  // namespace distsim
