// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "distsim/corpus_io.hpp"
#include "distsim/pair_counts.hpp"
#include "distsim/sparse_distribution.hpp"

namespace testutil {

using namespace distsim;

inline const char* kRoseSentence = "a rose is a rose is not a nose\n";

inline PairCounts rose_counts() {
  std::istringstream in(kRoseSentence);
  return ingest_tokens(in);
}

inline std::vector<PairOccurrence> rose_occurrences(Vocabulary& vocab) {
  std::istringstream in(kRoseSentence);
  return extract_bigram_occurrences(in, vocab);
}

inline ObjectId id_of(const PairCounts& counts, const std::string& surface) {
  auto id = counts.vocab().find(surface);
  if (!id) throw DataError("test: unknown surface '" + surface + "'");
  return *id;
}

/// Random distribution over a universe of ids, with sparse support.
inline SparseDistribution random_distribution(std::mt19937_64& rng, std::size_t universe,
                                              std::size_t max_support) {
  std::size_t support = 1 + rng() % std::min(universe, max_support);
  std::vector<ContextId> ids(universe);
  for (std::size_t i = 0; i < universe; ++i) ids[i] = static_cast<ContextId>(i);
  for (std::size_t i = universe; i > 1; --i) std::swap(ids[i - 1], ids[rng() % i]);
  ids.resize(support);
  std::vector<SparseDistribution::Entry> entries;
  double mass = 0.0;
  for (ContextId y : ids) {
    double w = 0.05 + static_cast<double>(rng() % 1000) / 1000.0;
    entries.emplace_back(y, w);
    mass += w;
  }
  for (auto& [y, w] : entries) w /= mass;
  return SparseDistribution(entries);
}

/// Random pair table: every object and context occurs at least once.
inline PairCounts random_counts(std::uint64_t seed, std::size_t num_objects,
                                std::size_t num_contexts, std::size_t num_cells,
                                Count max_count = 9) {
  std::mt19937_64 rng(seed);
  PairCounts::Builder builder;
  for (std::size_t x = 0; x < num_objects; ++x)
    builder.vocab().intern("o" + std::to_string(x));
  for (std::size_t y = 0; y < num_contexts; ++y)
    builder.vocab().intern("c" + std::to_string(y));
  // Guarantee coverage of both sides.
  for (std::size_t i = 0; i < std::max(num_objects, num_contexts); ++i)
    builder.add(static_cast<ObjectId>(i % num_objects),
                static_cast<ContextId>(num_objects + (i % num_contexts)),
                1 + rng() % max_count);
  for (std::size_t i = 0; i < num_cells; ++i)
    builder.add(static_cast<ObjectId>(rng() % num_objects),
                static_cast<ContextId>(num_objects + (rng() % num_contexts)),
                1 + rng() % max_count);
  return std::move(builder).build();
}

/// Grouped synthetic source: objects in the same group share a context
/// distribution concentrated on the group's own block of contexts.  By
/// default the blocks are disjoint and equal; explicit blocks may overlap,
/// which makes some groups closer than others (annealing then meets their
/// phase transitions at distinct temperatures instead of all at once).
struct GroupedSource {
  std::size_t num_groups;
  std::size_t objects_per_group;
  std::size_t num_contexts;
  double in_group_mass;  // probability mass on the group's own block
  std::vector<std::pair<std::size_t, std::size_t>> blocks = {};  // [lo, hi) per group

  std::size_t num_objects() const { return num_groups * objects_per_group; }
  std::size_t group_of(std::size_t object) const { return object / objects_per_group; }

  std::string object_name(std::size_t x) const { return "n" + std::to_string(x); }
  std::string context_name(std::size_t y) const { return "v" + std::to_string(y); }

  std::pair<std::size_t, std::size_t> block_of(std::size_t group) const {
    if (!blocks.empty()) return blocks[group];
    std::size_t block = num_contexts / num_groups;
    std::size_t lo = group * block;
    std::size_t hi = (group + 1 == num_groups) ? num_contexts : lo + block;
    return {lo, hi};
  }

  /// P(y | group): the group's mass uniform over its block plus the
  /// complement uniform over all contexts.
  double context_prob(std::size_t group, std::size_t context) const {
    auto [lo, hi] = block_of(group);
    double p = (1.0 - in_group_mass) / static_cast<double>(num_contexts);
    if (context >= lo && context < hi)
      p += in_group_mass / static_cast<double>(hi - lo);
    return p;
  }

  std::size_t sample_context(std::size_t group, std::mt19937_64& rng) const {
    double u = static_cast<double>(rng()) / (static_cast<double>(std::mt19937_64::max()) + 1.0);
    double acc = 0.0;
    for (std::size_t y = 0; y < num_contexts; ++y) {
      acc += context_prob(group, y);
      if (u < acc) return y;
    }
    return num_contexts - 1;
  }

  /// Sample occurrences (objects uniform, contexts from the group law),
  /// interning names into the vocabulary in object-then-context id order.
  std::vector<PairOccurrence> sample(Vocabulary& vocab, std::size_t n,
                                     std::uint64_t seed) const {
    for (std::size_t x = 0; x < num_objects(); ++x) vocab.intern(object_name(x));
    for (std::size_t y = 0; y < num_contexts; ++y) vocab.intern(context_name(y));
    std::mt19937_64 rng(seed);
    std::vector<PairOccurrence> occs;
    occs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t x = rng() % num_objects();
      std::size_t y = sample_context(group_of(x), rng);
      occs.push_back({static_cast<ObjectId>(x),
                      static_cast<ContextId>(num_objects() + y)});
    }
    return occs;
  }

  /// Exact object distributions (one per object, its group's law), for
  /// clustering tests that bypass sampling noise.
  std::vector<SparseDistribution> exact_distributions(double jitter, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<SparseDistribution> out;
    for (std::size_t x = 0; x < num_objects(); ++x) {
      std::vector<SparseDistribution::Entry> entries;
      double mass = 0.0;
      for (std::size_t y = 0; y < num_contexts; ++y) {
        double u = 2.0 * (static_cast<double>(rng() % 1000) / 1000.0) - 1.0;
        double p = context_prob(group_of(x), y) * (1.0 + jitter * u);
        entries.emplace_back(static_cast<ContextId>(y), p);
        mass += p;
      }
      for (auto& [y, p] : entries) p /= mass;
      out.emplace_back(entries);
    }
    return out;
  }
};

inline SparseDistribution dist_from(std::vector<std::pair<ContextId, double>> entries) {
  return SparseDistribution(std::move(entries));
}

/// Dense toy corpus with at least twice as many objects as contexts and
/// near-uniform counts: the regime where confusion-probability entries
/// stay below half the maximum context probability.
inline PairCounts dense_confusion_corpus(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PairCounts::Builder builder;
  const int objects = 12, contexts = 4;
  for (int x = 0; x < objects; ++x) builder.vocab().intern("o" + std::to_string(x));
  for (int y = 0; y < contexts; ++y) builder.vocab().intern("c" + std::to_string(y));
  for (ObjectId x = 0; x < objects; ++x)
    for (ContextId y = objects; y < objects + contexts; ++y)
      builder.add(x, y, 1 + rng() % 2);
  return std::move(builder).build();
}

}  // namespace testutil
