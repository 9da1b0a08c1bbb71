// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "distsim/corpus_io.hpp"
#include "distsim/split.hpp"
#include "helpers.hpp"

using namespace distsim;
using testutil::id_of;

TEST_CASE("adjacent bigrams of the rose sentence") {
  Vocabulary vocab;
  std::istringstream in(testutil::kRoseSentence);
  auto occs = extract_bigram_occurrences(in, vocab);
  REQUIRE(occs.size() == 8);
  CHECK(vocab.surface(occs[0].object) == "a");
  CHECK(vocab.surface(occs[0].context) == "rose");

  PairCounts counts = counts_from_occurrences(vocab, occs);
  CHECK(counts.count(id_of(counts, "a"), id_of(counts, "rose")) == 2);
  CHECK(counts.count(id_of(counts, "a"), id_of(counts, "nose")) == 1);
  CHECK(counts.object_marginal(id_of(counts, "a")) == 3);
  CHECK(counts.total() == 8);
}

TEST_CASE("bigrams never cross line boundaries") {
  Vocabulary vocab;
  std::istringstream in("x y\ny z\n");
  auto occs = extract_bigram_occurrences(in, vocab);
  REQUIRE(occs.size() == 2);
  CHECK(vocab.surface(occs[0].object) == "x");
  CHECK(vocab.surface(occs[1].object) == "y");

  std::istringstream single("lonely\n\n");
  auto none = extract_bigram_occurrences(single, vocab);
  CHECK(none.empty());
}

TEST_CASE("pair file ingestion accumulates explicit counts") {
  std::istringstream in("dog\tbarks\t3\ndog\tbarks\t3\n");
  PairCounts counts = ingest_pairs(in);
  CHECK(counts.count(id_of(counts, "dog"), id_of(counts, "barks")) == 6);
  CHECK(counts.total() == 6);
}

TEST_CASE("ingestion rejects bad input") {
  SECTION("empty stream") {
    std::istringstream in("");
    CHECK_THROWS_AS(ingest_pairs(in), DataError);
  }
  SECTION("malformed line reports its number") {
    std::istringstream in("a\tb\nbroken-line\n");
    CHECK_THROWS_WITH(ingest_pairs(in), Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("zero or negative count") {
    std::istringstream zero("a\tb\t0\n");
    CHECK_THROWS_AS(ingest_pairs(zero), DataError);
    std::istringstream neg("a\tb\t-2\n");
    CHECK_THROWS_AS(ingest_pairs(neg), DataError);
  }
}

TEST_CASE("marginal sums equal the total") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    PairCounts counts = testutil::random_counts(seed, 12, 9, 150);
    Count object_sum = 0, context_sum = 0;
    for (ObjectId x : counts.object_ids()) object_sum += counts.object_marginal(x);
    for (ContextId y : counts.context_ids()) context_sum += counts.context_marginal(y);
    CHECK(object_sum == counts.total());
    CHECK(context_sum == counts.total());
  }
}

TEST_CASE("counts round-trip through the serialized container") {
  PairCounts counts = testutil::random_counts(7, 10, 8, 60);
  std::stringstream buffer;
  save_counts(buffer, counts);
  PairCounts reloaded = load_counts(buffer);
  CHECK(reloaded == counts);
}

TEST_CASE("singleton filtering") {
  PairCounts counts = testutil::rose_counts();
  PairCounts filtered = filter_singletons(counts);
  CHECK(filtered.total() == 4);
  CHECK(filtered.count(id_of(counts, "a"), id_of(counts, "rose")) == 2);
  CHECK(filtered.count(id_of(counts, "rose"), id_of(counts, "is")) == 2);
  CHECK(filtered.count(id_of(counts, "is"), id_of(counts, "a")) == 0);
  // "not" loses its only pair but stays in the vocabulary.
  CHECK(filtered.object_marginal(id_of(counts, "not")) == 0);
  CHECK(filtered.vocab().find("not").has_value());

  SECTION("idempotent") { CHECK(filter_singletons(filtered) == filtered); }
  SECTION("identity when no singletons") {
    std::istringstream in("p\tq\t2\nq\tr\t5\n");
    PairCounts no_singletons = ingest_pairs(in);
    CHECK(filter_singletons(no_singletons) == no_singletons);
  }
  SECTION("all singletons annihilate") {
    std::istringstream in("p\tq\nq\tr\n");
    PairCounts all_singletons = ingest_pairs(in);
    CHECK(filter_singletons(all_singletons).num_pairs() == 0);
  }
}

TEST_CASE("object truncation keeps the most frequent, ties lexicographic") {
  std::istringstream in(
      "beta\tv\t3\n"
      "alpha\tv\t3\n"
      "gamma\tv\t9\n"
      "delta\tw\t1\n");
  PairCounts counts = ingest_pairs(in, {.lowercase = false, .top_objects = 2});
  CHECK(counts.num_objects() == 2);
  CHECK(counts.object_marginal(id_of(counts, "gamma")) == 9);
  CHECK(counts.object_marginal(id_of(counts, "alpha")) == 3);  // beats "beta" on the tie
  CHECK(counts.object_marginal(id_of(counts, "beta")) == 0);
}

TEST_CASE("corpus splits are deterministic and fold-balanced") {
  testutil::GroupedSource source{3, 6, 12, 0.85};
  Vocabulary vocab;
  auto occs = source.sample(vocab, 400, 11);

  SplitOptions options{.folds = 5, .seed = 99, .unseen_only = false, .train_fraction = 0.8};
  CorpusSplit a = split_corpus(vocab, occs, options);
  CorpusSplit b = split_corpus(vocab, occs, options);
  REQUIRE(a.num_folds() == 5);
  CHECK(a.train == b.train);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.test(i) == b.test(i));

  // Folds partition the held-out multiset with sizes differing by <= 1.
  std::size_t total = 0, lo = occs.size(), hi = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    total += a.test(i).size();
    lo = std::min(lo, a.test(i).size());
    hi = std::max(hi, a.test(i).size());
  }
  CHECK(total == occs.size() - static_cast<std::size_t>(0.8 * occs.size()));
  CHECK(hi - lo <= 1);
  CHECK(a.tune(0).size() == total - a.test(0).size());
}

TEST_CASE("unseen-only splits exclude training pairs") {
  testutil::GroupedSource source{2, 5, 10, 0.8};
  Vocabulary vocab;
  auto occs = source.sample(vocab, 600, 5);
  SplitOptions options{.folds = 3, .seed = 1, .unseen_only = true, .train_fraction = 0.7};
  CorpusSplit split = split_corpus(vocab, occs, options);
  for (std::size_t i = 0; i < split.num_folds(); ++i)
    for (const PairOccurrence& occ : split.test(i))
      CHECK(split.train.count(occ.object, occ.context) == 0);
}

TEST_CASE("unseen-only split of a fully seen corpus yields empty folds with a warning") {
  // Ten copies of one pair: the held-out tail is always seen in train.
  Vocabulary vocab;
  ObjectId x = vocab.intern("p");
  ContextId y = vocab.intern("q");
  std::vector<PairOccurrence> occs(10, PairOccurrence{x, y});
  SplitOptions options{.folds = 2, .seed = 3, .unseen_only = true, .train_fraction = 0.5};
  CorpusSplit split = split_corpus(vocab, occs, options);
  CHECK(split.all_candidates_seen);
  for (std::size_t i = 0; i < split.num_folds(); ++i) CHECK(split.test(i).empty());
}

TEST_CASE("ten unseen candidates across five folds give tests of two, tunes of eight") {
  // Twenty distinct pairs: whatever half lands in train, the other ten are
  // unseen candidates.
  Vocabulary vocab;
  std::vector<PairOccurrence> occs;
  for (int i = 0; i < 20; ++i) {
    ObjectId x = vocab.intern("u" + std::to_string(i));
    ContextId y = vocab.intern("w" + std::to_string(i));
    occs.push_back({x, y});
  }
  SplitOptions options{.folds = 5, .seed = 0, .unseen_only = true, .train_fraction = 0.5};
  CorpusSplit split = split_corpus(vocab, occs, options);
  REQUIRE(split.all_heldout().size() == 10);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(split.test(i).size() == 2);
    CHECK(split.tune(i).size() == 8);
  }
}

TEST_CASE("splitting rejects more folds than distinct candidate pairs") {
  Vocabulary vocab;
  std::vector<PairOccurrence> occs;
  for (int i = 0; i < 4; ++i)
    occs.push_back({vocab.intern("x" + std::to_string(i)), vocab.intern("y")});
  SplitOptions options{.folds = 6, .seed = 0, .unseen_only = false, .train_fraction = 0.5};
  CHECK_THROWS_AS(split_corpus(vocab, occs, options), DataError);
}
