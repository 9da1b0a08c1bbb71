// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>

#include "distsim/cluster.hpp"
#include "distsim/estimators.hpp"
#include "distsim/eval.hpp"
#include "helpers.hpp"

using namespace distsim;
using Catch::Matchers::WithinAbs;
using testutil::id_of;

namespace {

struct ConstantModel : ConditionalModel {
  double value;
  explicit ConstantModel(double v) : value(v) {}
  double prob(ObjectId, ContextId) const override { return value; }
};

struct TableModel : ConditionalModel {
  std::map<std::pair<ObjectId, ContextId>, double> table;
  double fallback = 0.0;
  double prob(ObjectId x, ContextId y) const override {
    auto it = table.find({x, y});
    return it == table.end() ? fallback : it->second;
  }
};

struct UnigramModel : ConditionalModel {
  const PairCounts* counts;
  explicit UnigramModel(const PairCounts& c) : counts(&c) {}
  double prob(ObjectId, ContextId y) const override { return counts->unigram(y); }
};

}  // namespace

TEST_CASE("pseudo-word pairing by adjacent frequency rank") {
  std::istringstream in(
      "x\tmake\t10\n"
      "x\ttake\t9\n"
      "x\tfix\t5\n"
      "x\tmend\t4\n"
      "x\tsing\t1\n");
  PairCounts counts = ingest_pairs(in);
  PseudowordMap map = build_pseudowords(counts, 1);
  // Five contexts: two pseudo-words, the odd leftover dropped.
  CHECK(map.size() == 2);
  CHECK(map.partner(id_of(counts, "make")) == id_of(counts, "take"));
  CHECK(map.partner(id_of(counts, "take")) == id_of(counts, "make"));
  CHECK(map.partner(id_of(counts, "fix")) == id_of(counts, "mend"));
  CHECK_FALSE(map.contains(id_of(counts, "sing")));

  SECTION("two contexts give exactly one pseudo-word") {
    std::istringstream two("p\tq\t2\nq\tr\t1\n");
    PairCounts tiny = ingest_pairs(two);
    CHECK(build_pseudowords(tiny, 0).size() == 1);
  }
  SECTION("fewer than two contexts is an error") {
    Vocabulary vocab;
    PairCounts::Builder builder(vocab);
    builder.vocab().intern("a");
    builder.vocab().intern("b");
    builder.add(0, 1, 3);
    PairCounts one = std::move(builder).build();
    CHECK_THROWS_AS(build_pseudowords(one, 0), DataError);
  }
}

TEST_CASE("disambiguation error rate") {
  std::istringstream in(
      "x\tmake\t10\n"
      "x\ttake\t9\n");
  PairCounts counts = ingest_pairs(in);
  PseudowordMap map = build_pseudowords(counts, 0);
  ObjectId x = id_of(counts, "x");
  ContextId make = id_of(counts, "make"), take = id_of(counts, "take");
  std::vector<PairOccurrence> test = {{x, make}, {x, make}, {x, take}, {x, make}};

  SECTION("a model that always ties scores one half") {
    ConstantModel ties(0.25);
    CHECK_THAT(disambiguation_error_rate(ties, test, map).error_rate, WithinAbs(0.5, 1e-15));
  }
  SECTION("an oracle scores zero") {
    // The truth must be a function of the conditioning word, so the take
    // occurrence gets its own object.
    std::istringstream more("x\tmake\t10\nx\ttake\t9\nz\tmake\t1\nz\ttake\t1\n");
    PairCounts wider = ingest_pairs(more);
    PseudowordMap wider_map = build_pseudowords(wider, 0);
    ObjectId wx = id_of(wider, "x"), z = id_of(wider, "z");
    ContextId wmake = id_of(wider, "make"), wtake = id_of(wider, "take");
    std::vector<PairOccurrence> decisions = {{wx, wmake}, {wx, wmake}, {z, wtake}};
    TableModel oracle;
    for (const PairOccurrence& occ : decisions) oracle.table[{occ.object, occ.context}] = 1.0;
    CHECK(disambiguation_error_rate(oracle, decisions, wider_map).error_rate == 0.0);
  }
  SECTION("a model preferring the foil errs on its occurrences") {
    TableModel anti;
    anti.table[{x, make}] = 0.1;
    anti.table[{x, take}] = 0.9;
    ErrorRateReport r = disambiguation_error_rate(anti, test, map);
    CHECK(r.incorrect == 3);  // the three (x, make) occurrences
    CHECK(r.ties == 0);
    CHECK_THAT(r.error_rate, WithinAbs(0.75, 1e-15));
  }
  SECTION("error rate is invariant under monotone rescaling of scores") {
    TableModel anti;
    anti.table[{x, make}] = 0.1;
    anti.table[{x, take}] = 0.9;
    TableModel scaled;
    for (const auto& [key, value] : anti.table) scaled.table[key] = 7.0 * value + 0.01;
    scaled.fallback = 0.01;
    CHECK(disambiguation_error_rate(anti, test, map).error_rate ==
          disambiguation_error_rate(scaled, test, map).error_rate);
  }
  SECTION("empty test set is an error") {
    ConstantModel ties(0.5);
    std::vector<PairOccurrence> empty;
    CHECK_THROWS_AS(disambiguation_error_rate(ties, empty, map), DataError);
  }
}

TEST_CASE("MLE scores exactly one half on unseen pairs") {
  testutil::GroupedSource source{2, 6, 10, 0.8};
  Vocabulary vocab;
  auto occs = source.sample(vocab, 500, 3);
  SplitOptions options{.folds = 2, .seed = 8, .unseen_only = true, .train_fraction = 0.75};
  CorpusSplit split = split_corpus(vocab, occs, options);
  REQUIRE_FALSE(split.test(0).empty());
  PseudowordMap map = build_pseudowords(split.train, 5);
  // Decisions with no training evidence on either alternative: the MLE
  // assigns zero to both, so every one is a tie.
  std::vector<PairOccurrence> test;
  for (const PairOccurrence& occ : split.test(0))
    if (map.contains(occ.context) && split.train.object_marginal(occ.object) > 0 &&
        split.train.count(occ.object, map.partner(occ.context)) == 0)
      test.push_back(occ);
  REQUIRE_FALSE(test.empty());
  MleModel mle(split.train);
  ErrorRateReport report = disambiguation_error_rate(mle, test, map);
  CHECK(report.error_rate == 0.5);
  CHECK(report.ties == report.n);
}

TEST_CASE("perplexity") {
  PairCounts counts = testutil::rose_counts();
  Vocabulary vocab;
  auto occs = testutil::rose_occurrences(vocab);

  SECTION("a uniform model scores the alternative count") {
    ConstantModel uniform(1.0 / static_cast<double>(counts.num_contexts()));
    CHECK_THAT(perplexity(uniform, occs).perplexity,
               WithinAbs(static_cast<double>(counts.num_contexts()), 1e-9));
  }
  SECTION("a certain model scores one") {
    ConstantModel certain(1.0);
    CHECK_THAT(perplexity(certain, occs).perplexity, WithinAbs(1.0, 1e-12));
  }
  SECTION("rose MLE on its own training occurrences") {
    MleModel mle(counts);
    // Product of the eight MLE values is 3^-3, so PP = 3^(3/8).
    CHECK_THAT(perplexity(mle, occs).perplexity, WithinAbs(std::pow(3.0, 3.0 / 8.0), 1e-12));
  }
  SECTION("zero-probability events are flagged, not skipped") {
    TableModel zeros;
    zeros.fallback = 0.0;
    PerplexityReport report = perplexity(zeros, occs);
    CHECK_FALSE(report.finite());
    CHECK(std::isinf(report.perplexity));
    CHECK(report.zero_probability_events == occs.size());
  }
  SECTION("concatenation lies between the parts") {
    MleModel mle(counts);
    std::vector<PairOccurrence> first(occs.begin(), occs.begin() + 4);
    std::vector<PairOccurrence> second(occs.begin() + 4, occs.end());
    double pp1 = perplexity(mle, first).perplexity;
    double pp2 = perplexity(mle, second).perplexity;
    double ppall = perplexity(mle, occs).perplexity;
    CHECK(ppall >= std::min(pp1, pp2) - 1e-12);
    CHECK(ppall <= std::max(pp1, pp2) + 1e-12);
  }
}

TEST_CASE("unseen occurrence filtering") {
  Vocabulary vocab;
  auto occs = testutil::rose_occurrences(vocab);
  PairCounts counts = counts_from_occurrences(vocab, occs);
  CHECK(unseen_occurrences(occs, counts).empty());
  std::vector<PairOccurrence> mixed = occs;
  mixed.push_back({occs[0].object, occs[2].object});  // (a, is): unseen
  CHECK(unseen_occurrences(mixed, counts).size() == 1);
}

TEST_CASE("aggregate KL against the training rows") {
  PairCounts counts = testutil::rose_counts();
  MleModel mle(counts);
  CHECK_THAT(aggregate_kl(counts, mle), WithinAbs(0.0, 1e-12));

  // A one-cluster model over heterogeneous objects is strictly worse.
  ClusterInput input = make_cluster_input(counts);
  ClusterState state = init_state(input, 1.0);
  ClusterModel cluster(input, state);
  CHECK(aggregate_kl(counts, cluster) > 0.0);

  SECTION("two-object toy against direct summation") {
    std::istringstream in(
        "p\tu\t3\np\tv\t1\n"
        "q\tu\t1\nq\tv\t1\n");
    PairCounts toy = ingest_pairs(in);
    TableModel model;
    ObjectId p = id_of(toy, "p"), q = id_of(toy, "q");
    ContextId u = id_of(toy, "u"), v = id_of(toy, "v");
    model.table[{p, u}] = 0.6;
    model.table[{p, v}] = 0.4;
    model.table[{q, u}] = 0.5;
    model.table[{q, v}] = 0.5;
    double direct = 0.75 * std::log(0.75 / 0.6) + 0.25 * std::log(0.25 / 0.4) +
                    0.5 * std::log(0.5 / 0.5) + 0.5 * std::log(0.5 / 0.5);
    CHECK_THAT(aggregate_kl(toy, model), WithinAbs(direct, 1e-12));
  }
  SECTION("a model with a zero where the data has mass is an error") {
    TableModel broken;
    broken.fallback = 0.0;
    CHECK_THROWS_AS(aggregate_kl(counts, broken), DataError);
  }
}

TEST_CASE("verb decision task") {
  testutil::GroupedSource source{3, 8, 15, 0.9};
  Vocabulary vocab;
  auto occs = source.sample(vocab, 6000, 17);
  PairCounts counts = counts_from_occurrences(vocab, occs);

  DecisionTaskOptions options{.num_pairs = 20, .freq_window_lo = 50,
                              .freq_window_hi = 100000, .seed = 2};
  DecisionTask task = make_decision_task(counts, options);
  REQUIRE_FALSE(task.triples.empty());
  for (const PairOccurrence& occ : task.deleted_pairs)
    CHECK(task.pruned_counts.count(occ.object, occ.context) == 0);

  SECTION("the pre-deletion MLE itself makes no sign errors") {
    MleModel mle(counts);
    DecisionReport report = verb_decision_eval(counts, task.deleted_pairs, mle, task.triples);
    CHECK(report.overall_error == 0.0);
  }
  SECTION("a marginal-frequency model is consistently wrong on exceptional triples") {
    UnigramModel unigram(counts);
    DecisionReport report =
        verb_decision_eval(counts, task.deleted_pairs, unigram, task.triples);
    if (report.n_exceptional > 0) CHECK(report.exceptional_error == 1.0);
  }
  SECTION("a cluster model beats the marginal-frequency ratio") {
    ClusterInput input = make_cluster_input(task.pruned_counts);
    AnnealingSchedule schedule;
    schedule.beta0 = 0.5;
    schedule.growth_factor = 1.2;
    schedule.beta_max = 4096.0;
    schedule.seed = 31;
    AnnealResult annealed = anneal(input, schedule, 3);
    ClusterModel cluster(input, annealed.final_state);
    UnigramModel unigram(task.pruned_counts);
    DecisionReport cluster_report =
        verb_decision_eval(counts, task.deleted_pairs, cluster, task.triples);
    DecisionReport unigram_report =
        verb_decision_eval(counts, task.deleted_pairs, unigram, task.triples);
    CHECK(cluster_report.overall_error < unigram_report.overall_error);
  }
  SECTION("triples referencing undeleted or unseen pairs are rejected") {
    MleModel mle(counts);
    std::vector<DecisionTriple> bogus = {{task.triples[0].x, task.triples[0].y_other,
                                          task.triples[0].y}};
    CHECK_THROWS_AS(verb_decision_eval(counts, task.deleted_pairs, mle, bogus), DataError);
  }
}

TEST_CASE("grid search") {
  SECTION("a singleton grid returns its point") {
    std::vector<int> grid = {42};
    auto result = grid_search(grid, [](int) { return 7.0; });
    CHECK(result.best == 42);
    CHECK(result.best_objective == 7.0);
  }
  SECTION("a planted interior minimum is found") {
    std::vector<double> grid;
    for (double v = -3.0; v <= 3.0; v += 0.5) grid.push_back(v);
    auto result = grid_search(grid, [](double v) { return (v - 1.0) * (v - 1.0); });
    CHECK(result.best == 1.0);
    CHECK(result.report.size() == grid.size());
  }
  SECTION("ties resolve to the earliest grid point") {
    std::vector<int> grid = {3, 1, 2};
    auto result = grid_search(grid, [](int) { return 5.0; });
    CHECK(result.best == 3);
    CHECK(result.best_index == 0);
  }
  SECTION("an empty grid is an error") {
    std::vector<int> grid;
    CHECK_THROWS_AS(grid_search(grid, [](int) { return 0.0; }), DataError);
  }
  SECTION("parallel evaluation matches serial") {
    std::vector<double> grid;
    for (double v = 0.0; v < 40.0; v += 1.0) grid.push_back(v);
    auto objective = [](double v) { return std::cos(v) * v; };
    auto serial = grid_search(grid, objective, 1);
    auto parallel = grid_search(grid, objective, 4);
    CHECK(serial.best == parallel.best);
    CHECK(serial.report == parallel.report);
  }
}
