// Apache License, Version 2.0, refer to LICENSE.txt
//
// distsim: cooccurrence probability estimation under sparse data.
// Pipeline: ingest -> train-backoff -> neighbors/cluster -> prob/eval-*.
// Every command that writes an artifact also writes <output>.manifest.json
// with the parameters and input fingerprints needed to reproduce it.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "distsim/cluster.hpp"
#include "distsim/corpus_io.hpp"
#include "distsim/estimators.hpp"
#include "distsim/eval.hpp"
#include "distsim/manifest.hpp"
#include "distsim/neighbors.hpp"
#include "distsim/simlm.hpp"
#include "distsim/split.hpp"

using json = nlohmann::json;
using namespace distsim;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIntegrity = 3;

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

void write_manifest(const std::string& output_path, const std::string& command,
                    const json& params, const std::vector<std::string>& inputs) {
  json manifest;
  manifest["tool"] = "distsim";
  manifest["format"] = 1;
  manifest["command"] = command;
  manifest["parameters"] = params;
  json input_entries = json::array();
  for (const std::string& path : inputs)
    input_entries.push_back({{"path", path}, {"fnv64", file_fingerprint(path)}});
  manifest["inputs"] = input_entries;
  manifest["output"] = {{"path", output_path}, {"fnv64", file_fingerprint(output_path)}};
  std::ofstream out(output_path + ".manifest.json");
  if (!out) throw DataError("cannot write manifest for '" + output_path + "'");
  out << manifest.dump(2) << '\n';
}

void verify_fingerprint(const std::string& path, const std::string& expected,
                        const std::string& role) {
  std::string actual = file_fingerprint(path);
  if (actual != expected)
    throw IntegrityError(role + " '" + path + "' has fingerprint " + actual +
                         " but the manifest records " + expected);
}

PairCounts load_counts_file(const std::string& path) {
  auto in = open_input(path, true);
  return load_counts(in);
}

BackoffModel load_model_file(const std::string& path) {
  auto in = open_input(path, true);
  return BackoffModel::load(in);
}

LogBase parse_log_base(const std::string& name) {
  if (name == "10") return LogBase::base10();
  if (name == "e") return LogBase::natural();
  return LogBase::of(std::strtod(name.c_str(), nullptr));
}

ObjectId require_word(const Vocabulary& vocab, const std::string& surface) {
  auto id = vocab.find(surface);
  if (!id) throw DataError("'" + surface + "' is not in the vocabulary");
  return *id;
}

std::vector<PairOccurrence> load_occurrences(const std::string& path, Vocabulary& vocab,
                                             bool lowercase) {
  auto in = open_input(path);
  IngestOptions options;
  options.lowercase = lowercase;
  return read_pair_occurrences(in, vocab, options);
}

// Shared flags for commands that assemble an estimator.
struct EstimatorArgs {
  std::string estimator = "katz";
  std::string counts_path;
  std::string model_path;
  std::string graph_path;
  std::string manifest_path;
  double lambda = 0.5;
  double gamma = 0.15;

  void attach(CLI::App* cmd, bool with_manifest) {
    cmd->add_option("--estimator", estimator,
                    "one of mle, jm, katz, sim (default katz)");
    cmd->add_option("--counts", counts_path, "serialized counts file");
    cmd->add_option("--model", model_path, "serialized back-off model");
    cmd->add_option("--graph", graph_path, "neighbor graph file");
    cmd->add_option("--lambda", lambda, "Jelinek-Mercer weight (jm)");
    cmd->add_option("--gamma", gamma, "unigram interpolation weight (sim)");
    if (with_manifest)
      cmd->add_option("--manifest", manifest_path,
                      "similarity-model manifest; supplies and verifies the file set");
  }
};

/// Everything needed to answer probability queries, with consistent
/// lifetimes for the model pieces.
struct Estimator {
  PairCounts counts;
  std::optional<BackoffModel> model;
  std::optional<NeighborGraph> graph;
  std::unique_ptr<ConditionalModel> conditional;
  json description;
};

std::unique_ptr<Estimator> build_estimator(EstimatorArgs& args) {
  auto out = std::make_unique<Estimator>();
  json& desc = out->description;
  desc["estimator"] = args.estimator;

  if (!args.manifest_path.empty()) {
    auto in = open_input(args.manifest_path);
    json manifest = json::parse(in);
    if (manifest.value("kind", "") != "sim-model")
      throw DataError("'" + args.manifest_path + "' is not a similarity-model manifest");
    args.estimator = "sim";
    desc["estimator"] = "sim";
    args.counts_path = manifest["counts"]["path"];
    args.model_path = manifest["model"]["path"];
    args.graph_path = manifest["graph"]["path"];
    args.gamma = manifest["gamma"];
    verify_fingerprint(args.counts_path, manifest["counts"]["fnv64"], "counts file");
    verify_fingerprint(args.model_path, manifest["model"]["fnv64"], "model file");
    verify_fingerprint(args.graph_path, manifest["graph"]["fnv64"], "neighbor graph");
  }

  if (args.counts_path.empty()) throw DataError("--counts is required");
  out->counts = load_counts_file(args.counts_path);
  desc["counts"] = args.counts_path;

  if (args.estimator == "mle") {
    out->conditional = std::make_unique<MleModel>(out->counts);
  } else if (args.estimator == "jm") {
    desc["lambda"] = args.lambda;
    out->conditional = std::make_unique<JelinekMercerModel>(
        out->counts, LambdaSchedule::constant(args.lambda));
  } else if (args.estimator == "katz") {
    if (args.model_path.empty()) throw DataError("--model is required for katz");
    out->model = load_model_file(args.model_path);
    desc["model"] = args.model_path;
    out->conditional = std::make_unique<BackoffModel>(*out->model);
  } else if (args.estimator == "sim") {
    if (args.model_path.empty() || args.graph_path.empty())
      throw DataError("--model and --graph are required for sim");
    out->model = load_model_file(args.model_path);
    auto graph_in = open_input(args.graph_path);
    out->graph = load_neighbor_graph(graph_in, out->counts.vocab());
    desc["model"] = args.model_path;
    desc["graph"] = args.graph_path;
    desc["gamma"] = args.gamma;
    desc["measure"] = measure_name(out->graph->params().measure);
    out->conditional =
        std::make_unique<SimBackoffModel>(out->counts, *out->model, *out->graph, args.gamma);
  } else {
    throw DataError("unknown estimator '" + args.estimator + "'");
  }
  return out;
}

void write_sim_manifest(const std::string& path, const EstimatorArgs& args) {
  json manifest;
  manifest["kind"] = "sim-model";
  manifest["counts"] = {{"path", args.counts_path},
                        {"fnv64", file_fingerprint(args.counts_path)}};
  manifest["model"] = {{"path", args.model_path},
                       {"fnv64", file_fingerprint(args.model_path)}};
  manifest["graph"] = {{"path", args.graph_path},
                       {"fnv64", file_fingerprint(args.graph_path)}};
  manifest["gamma"] = args.gamma;
  auto out = open_output(path);
  out << manifest.dump(2) << '\n';
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) values.push_back(std::strtod(item.c_str(), nullptr));
  if (values.empty()) throw DataError("empty grid '" + spec + "'");
  return values;
}

// --- subcommand bodies ------------------------------------------------------

int run_ingest(const std::string& pairs_path, const std::string& tokens_path, bool lowercase,
               std::size_t top_objects, bool drop_singletons, const std::string& output) {
  IngestOptions options{.lowercase = lowercase, .top_objects = top_objects};
  PairCounts counts;
  std::string input_path;
  if (!pairs_path.empty()) {
    auto in = open_input(pairs_path);
    counts = ingest_pairs(in, options);
    input_path = pairs_path;
  } else {
    auto in = open_input(tokens_path);
    counts = ingest_tokens(in, options);
    input_path = tokens_path;
  }
  if (drop_singletons) counts = filter_singletons(counts);
  auto out = open_output(output, true);
  save_counts(out, counts);
  out.close();
  write_manifest(output, "ingest",
                 {{"lowercase", lowercase},
                  {"top_objects", top_objects},
                  {"filter_singletons", drop_singletons}},
                 {input_path});
  std::cout << "objects\t" << counts.num_objects() << "\ncontexts\t" << counts.num_contexts()
            << "\npairs\t" << counts.num_pairs() << "\ntotal\t" << counts.total() << '\n';
  return 0;
}

int run_extract(const std::string& tokens_path, bool lowercase, const std::string& output) {
  auto in = open_input(tokens_path);
  auto out = open_output(output);
  std::size_t n = 0;
  extract_adjacent_bigrams(in, lowercase, [&](const std::string& a, const std::string& b) {
    out << a << '\t' << b << '\n';
    ++n;
  });
  out.close();
  write_manifest(output, "extract", {{"lowercase", lowercase}}, {tokens_path});
  std::cout << "pairs\t" << n << '\n';
  return 0;
}

int run_train_backoff(const std::string& counts_path, Count gt_ceiling,
                      bool singletons_as_unseen, const std::string& output) {
  PairCounts counts = load_counts_file(counts_path);
  BackoffModel model =
      BackoffModel::build(counts, {.gt_ceiling = gt_ceiling,
                                   .singletons_as_unseen = singletons_as_unseen});
  auto out = open_output(output, true);
  model.save(out);
  out.close();
  write_manifest(output, "train-backoff",
                 {{"gt_ceiling", gt_ceiling}, {"singletons_as_unseen", singletons_as_unseen}},
                 {counts_path});
  double total_leftover = 0.0;
  for (ObjectId x : model.object_ids()) total_leftover += model.leftover_mass(x);
  std::cout << "objects\t" << model.object_ids().size() << "\nmean_leftover\t"
            << full_precision(total_leftover /
                              static_cast<double>(model.object_ids().size()))
            << '\n';
  return 0;
}

int run_neighbors(const std::string& counts_path, const std::string& model_path,
                  const std::string& measure, std::size_t k, double t, double beta,
                  const std::string& log_base, unsigned workers, const std::string& output) {
  PairCounts counts = load_counts_file(counts_path);
  NeighborParams params;
  params.measure = parse_measure(measure);
  params.k = k == 0 ? counts.num_objects() : k;
  params.t = t;
  params.beta = beta;
  params.base = parse_log_base(log_base);
  std::optional<BackoffModel> model;
  std::vector<std::string> inputs = {counts_path};
  if (params.measure == Measure::kKL) {
    if (model_path.empty()) throw DataError("--model is required for the kl measure");
    model = load_model_file(model_path);
    inputs.push_back(model_path);
  }
  NeighborGraph graph =
      build_neighbor_graph(counts, params, model ? &*model : nullptr, workers);
  auto out = open_output(output);
  save_neighbor_graph(out, graph, counts.vocab());
  out.close();
  write_manifest(output, "neighbors",
                 {{"measure", measure},
                  {"k", params.k},
                  {"t", t},
                  {"beta", beta},
                  {"log_base", log_base},
                  {"workers", workers}},
                 inputs);
  std::cout << "rows\t" << graph.objects_with_rows().size() << '\n';
  return 0;
}

int run_cluster(const std::string& counts_path, const AnnealingSchedule& schedule,
                std::size_t clusters, const std::string& prior, std::size_t top_m,
                const std::string& output_prefix) {
  PairCounts counts = load_counts_file(counts_path);
  ClusterInput input = make_cluster_input(
      counts, prior == "marginal" ? PriorMode::kMarginal : PriorMode::kUniform);
  AnnealResult result = anneal(input, schedule, clusters);

  std::string hierarchy_path = output_prefix + ".hierarchy.tsv";
  std::string memberships_path = output_prefix + ".memberships.tsv";
  std::string report_path = output_prefix + ".report.tsv";
  {
    auto out = open_output(hierarchy_path);
    save_hierarchy(out, result, input, counts.vocab(), top_m);
  }
  {
    auto out = open_output(memberships_path);
    save_memberships(out, input, result.final_state, counts.vocab());
  }
  {
    auto out = open_output(report_path);
    out << "clusters\tbeta\taggregate_kl_train\n";
    for (const ClusterSnapshot& snapshot : result.snapshots) {
      ClusterModel model(input, snapshot.state);
      out << snapshot.state.num_centroids() << '\t' << full_precision(snapshot.beta) << '\t'
          << full_precision(aggregate_kl(counts, model)) << '\n';
    }
  }
  json params = {{"beta0", schedule.beta0},
                 {"growth", schedule.growth_factor},
                 {"shrink", schedule.shrink_factor},
                 {"beta_max", schedule.beta_max},
                 {"max_em_iterations", schedule.max_em_iterations},
                 {"convergence_tol", schedule.convergence_tol},
                 {"perturbation_eps", schedule.perturbation_eps},
                 {"split_threshold", schedule.split_threshold},
                 {"seed", schedule.seed},
                 {"clusters", clusters},
                 {"prior", prior}};
  write_manifest(hierarchy_path, "cluster", params, {counts_path});
  write_manifest(memberships_path, "cluster", params, {counts_path});
  write_manifest(report_path, "cluster", params, {counts_path});
  std::cout << "leaves\t" << result.final_state.num_centroids() << "\nbeta\t"
            << full_precision(result.final_state.beta) << '\n';
  return 0;
}

int run_prob(EstimatorArgs& args, const std::string& object, const std::string& context) {
  auto estimator = build_estimator(args);
  ObjectId x = require_word(estimator->counts.vocab(), object);
  ContextId y = require_word(estimator->counts.vocab(), context);
  std::cout << full_precision(estimator->conditional->prob(x, y)) << '\n';
  return 0;
}

int run_eval_pseudo(EstimatorArgs& args, const std::string& test_path, std::uint64_t seed,
                    const std::string& report_path, const std::string& save_manifest) {
  auto estimator = build_estimator(args);
  Vocabulary vocab = estimator->counts.vocab();
  auto test_all = load_occurrences(test_path, vocab, false);
  if (vocab.size() != estimator->counts.vocab().size())
    throw DataError("test file introduces words outside the training vocabulary");

  PseudowordMap map = build_pseudowords(estimator->counts, seed);
  std::vector<PairOccurrence> test;
  for (const PairOccurrence& occ : test_all)
    if (map.contains(occ.context) && estimator->counts.object_marginal(occ.object) > 0)
      test.push_back(occ);
  std::size_t dropped = test_all.size() - test.size();
  if (dropped > 0)
    std::cerr << "note: dropped " << dropped
              << " occurrences outside the pseudo-word map or vocabulary\n";

  ErrorRateReport report = disambiguation_error_rate(*estimator->conditional, test, map);
  std::cout << "n\t" << report.n << "\nincorrect\t" << report.incorrect << "\nties\t"
            << report.ties << "\nerror_rate\t" << full_precision(report.error_rate) << '\n';
  if (!report_path.empty()) {
    auto out = open_output(report_path);
    out << "metric\tvalue\tn\terrors\tties\tparameters\tsplit\n";
    out << "pseudo_error\t" << full_precision(report.error_rate) << '\t' << report.n << '\t'
        << report.incorrect << '\t' << report.ties << '\t'
        << estimator->description.dump() << '\t' << test_path << '\n';
    out.close();
    write_manifest(report_path, "eval-pseudo",
                   {{"seed", seed}, {"estimator", estimator->description}},
                   {args.counts_path, test_path});
  }
  if (!save_manifest.empty() && args.estimator == "sim") write_sim_manifest(save_manifest, args);
  return 0;
}

int run_eval_ppl(EstimatorArgs& args, const std::string& test_path,
                 const std::string& report_path) {
  auto estimator = build_estimator(args);
  Vocabulary vocab = estimator->counts.vocab();
  auto test = load_occurrences(test_path, vocab, false);
  if (vocab.size() != estimator->counts.vocab().size())
    throw DataError("test file introduces words outside the training vocabulary");
  std::vector<PairOccurrence> usable;
  for (const PairOccurrence& occ : test)
    if (estimator->counts.object_marginal(occ.object) > 0) usable.push_back(occ);
  if (usable.size() != test.size())
    std::cerr << "note: dropped " << (test.size() - usable.size())
              << " occurrences with unknown conditioning words\n";

  PerplexityReport overall = perplexity(*estimator->conditional, usable);
  auto unseen = unseen_occurrences(usable, estimator->counts);
  std::cout << "n\t" << overall.n << "\nperplexity\t" << full_precision(overall.perplexity)
            << "\nunseen_n\t" << unseen.size() << '\n';
  if (!unseen.empty()) {
    PerplexityReport restricted = perplexity(*estimator->conditional, unseen);
    std::cout << "unseen_perplexity\t" << full_precision(restricted.perplexity) << '\n';
  }
  if (overall.zero_probability_events > 0)
    std::cout << "zero_probability_events\t" << overall.zero_probability_events << '\n';
  if (!report_path.empty()) {
    auto out = open_output(report_path);
    out << "metric\tvalue\tn\terrors\tties\tparameters\tsplit\n";
    out << "perplexity\t" << full_precision(overall.perplexity) << '\t' << overall.n
        << "\t0\t0\t" << estimator->description.dump() << '\t' << test_path << '\n';
    if (!unseen.empty())
      out << "unseen_perplexity\t"
          << full_precision(perplexity(*estimator->conditional, unseen).perplexity) << '\t'
          << unseen.size() << "\t0\t0\t" << estimator->description.dump() << '\t' << test_path
          << '\n';
    out.close();
    write_manifest(report_path, "eval-ppl", {{"estimator", estimator->description}},
                   {args.counts_path, test_path});
  }
  return 0;
}

int run_eval_decision(const std::string& counts_path, const DecisionTaskOptions& options,
                      std::size_t clusters, const AnnealingSchedule& schedule,
                      const std::string& report_path) {
  PairCounts counts = load_counts_file(counts_path);
  DecisionTask task = make_decision_task(counts, options);

  ClusterInput input = make_cluster_input(task.pruned_counts);
  AnnealResult annealed = anneal(input, schedule, clusters);
  ClusterModel cluster_model(input, annealed.final_state);
  DecisionReport cluster_report =
      verb_decision_eval(counts, task.deleted_pairs, cluster_model, task.triples);

  BackoffModel katz = BackoffModel::build(task.pruned_counts);
  DecisionReport katz_report =
      verb_decision_eval(counts, task.deleted_pairs, katz, task.triples);

  std::cout << "triples\t" << cluster_report.n << "\nexceptional\t"
            << cluster_report.n_exceptional << "\ncluster_error\t"
            << full_precision(cluster_report.overall_error) << "\ncluster_exceptional_error\t"
            << full_precision(cluster_report.exceptional_error) << "\nkatz_error\t"
            << full_precision(katz_report.overall_error) << "\nkatz_exceptional_error\t"
            << full_precision(katz_report.exceptional_error) << '\n';
  if (!report_path.empty()) {
    auto out = open_output(report_path);
    out << "model\toverall_error\texceptional_error\tn\tn_exceptional\n";
    out << "cluster\t" << full_precision(cluster_report.overall_error) << '\t'
        << full_precision(cluster_report.exceptional_error) << '\t' << cluster_report.n << '\t'
        << cluster_report.n_exceptional << '\n';
    out << "katz\t" << full_precision(katz_report.overall_error) << '\t'
        << full_precision(katz_report.exceptional_error) << '\t' << katz_report.n << '\t'
        << katz_report.n_exceptional << '\n';
    out.close();
    write_manifest(report_path, "eval-decision",
                   {{"num_pairs", options.num_pairs},
                    {"freq_lo", options.freq_window_lo},
                    {"freq_hi", options.freq_window_hi},
                    {"seed", options.seed},
                    {"clusters", clusters}},
                   {counts_path});
  }
  return 0;
}

int run_grid_search(const std::string& counts_path, const std::string& model_path,
                    const std::string& tune_path, const std::string& test_path,
                    const std::string& objective, const std::string& measure,
                    const std::string& k_grid, const std::string& t_grid,
                    const std::string& beta_grid, const std::string& gamma_grid,
                    std::uint64_t seed, unsigned workers, const std::string& report_path) {
  PairCounts counts = load_counts_file(counts_path);
  BackoffModel model = load_model_file(model_path);
  Vocabulary vocab = counts.vocab();
  auto tune_all = load_occurrences(tune_path, vocab, false);
  std::vector<PairOccurrence> test_all;
  if (!test_path.empty()) test_all = load_occurrences(test_path, vocab, false);
  if (vocab.size() != counts.vocab().size())
    throw DataError("tuning or test file introduces words outside the training vocabulary");
  auto keep_known = [&](const std::vector<PairOccurrence>& occs) {
    std::vector<PairOccurrence> out;
    for (const PairOccurrence& occ : occs)
      if (counts.object_marginal(occ.object) > 0) out.push_back(occ);
    return out;
  };
  std::vector<PairOccurrence> tune = keep_known(tune_all);
  std::vector<PairOccurrence> test = keep_known(test_all);

  Measure m = parse_measure(measure);
  struct Point {
    std::size_t k;
    double t, beta, gamma;
  };
  std::vector<Point> grid;
  for (double k : parse_grid(k_grid))
    for (double t : parse_grid(t_grid))
      for (double beta : parse_grid(beta_grid))
        for (double gamma : parse_grid(gamma_grid))
          grid.push_back({static_cast<std::size_t>(k), t, beta, gamma});

  bool by_error = objective == "error";
  bool unseen_only = objective == "ppl-unseen";
  if (!by_error && !unseen_only && objective != "ppl")
    throw DataError("unknown objective '" + objective + "'");

  PseudowordMap map = by_error ? build_pseudowords(counts, seed) : PseudowordMap{};
  auto restrict_events = [&](const std::vector<PairOccurrence>& occs) {
    std::vector<PairOccurrence> out;
    for (const PairOccurrence& occ : occs) {
      if (by_error && !map.contains(occ.context)) continue;
      if (unseen_only && counts.count(occ.object, occ.context) > 0) continue;
      out.push_back(occ);
    }
    return out;
  };
  std::vector<PairOccurrence> tune_events = restrict_events(tune);
  std::vector<PairOccurrence> test_events = restrict_events(test);
  if (tune_events.empty()) throw DataError("no usable tuning events for the objective");

  // Neighbor graphs depend on (k, t, beta) only; cache them across gammas.
  std::map<std::tuple<std::size_t, double, double>, NeighborGraph> graphs;
  for (const Point& p : grid) {
    auto key = std::make_tuple(p.k, p.t, p.beta);
    if (!graphs.count(key)) {
      NeighborParams params{.measure = m, .k = p.k, .t = p.t, .beta = p.beta};
      graphs.emplace(key,
                     build_neighbor_graph(counts, params,
                                          m == Measure::kKL ? &model : nullptr, workers));
    }
  }

  auto evaluate = [&](const Point& p, const std::vector<PairOccurrence>& events) {
    const NeighborGraph& graph = graphs.at(std::make_tuple(p.k, p.t, p.beta));
    SimBackoffModel sim(counts, model, graph, p.gamma);
    if (by_error) return disambiguation_error_rate(sim, events, map).error_rate;
    return perplexity(sim, events).perplexity;
  };
  auto result = grid_search(
      grid, [&](const Point& p) { return evaluate(p, tune_events); }, workers);

  // Baselines for the reduction columns: plain Katz back-off on the same
  // event sets.
  double base_tune = by_error ? disambiguation_error_rate(model, tune_events, map).error_rate
                              : perplexity(model, tune_events).perplexity;
  double base_test = 0.0;
  if (!test_events.empty())
    base_test = by_error ? disambiguation_error_rate(model, test_events, map).error_rate
                         : perplexity(model, test_events).perplexity;
  auto reduction_pct = [](double baseline, double value) {
    return 100.0 * (baseline - value) / baseline;
  };

  std::cout << "best_k\t" << result.best.k << "\nbest_t\t" << full_precision(result.best.t)
            << "\nbest_beta\t" << full_precision(result.best.beta) << "\nbest_gamma\t"
            << full_precision(result.best.gamma) << "\nbest_objective\t"
            << full_precision(result.best_objective) << "\nbaseline_objective\t"
            << full_precision(base_tune) << '\n';
  if (!report_path.empty()) {
    auto out = open_output(report_path);
    out << "k\tt\tbeta\tgamma\t" << objective << "\ttraining_reduction_pct"
        << "\ttest_reduction_pct\n";
    for (const auto& [p, value] : result.report) {
      out << p.k << '\t' << full_precision(p.t) << '\t' << full_precision(p.beta) << '\t'
          << full_precision(p.gamma) << '\t' << full_precision(value) << '\t'
          << full_precision(reduction_pct(base_tune, value)) << '\t';
      if (test_events.empty())
        out << "n/a";
      else
        out << full_precision(reduction_pct(base_test, evaluate(p, test_events)));
      out << '\n';
    }
    out.close();
    std::vector<std::string> inputs = {counts_path, model_path, tune_path};
    if (!test_path.empty()) inputs.push_back(test_path);
    write_manifest(report_path, "grid-search",
                   {{"objective", objective},
                    {"measure", measure},
                    {"k_grid", k_grid},
                    {"t_grid", t_grid},
                    {"beta_grid", beta_grid},
                    {"gamma_grid", gamma_grid},
                    {"seed", seed}},
                   inputs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"similarity-based estimation of word cooccurrence probabilities"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build a counts table from text");
  std::string in_pairs, in_tokens, out_counts;
  bool lowercase = false, drop_singletons = false;
  std::size_t top_objects = 0;
  ingest->add_option("--pairs", in_pairs, "tab-separated pair file");
  ingest->add_option("--tokens", in_tokens, "token file, one sentence per line");
  ingest->add_flag("--lowercase", lowercase, "lowercase all tokens");
  ingest->add_option("--top-objects", top_objects, "keep only the N most frequent objects");
  ingest->add_flag("--filter-singletons", drop_singletons, "drop pairs occurring once");
  ingest->add_option("-o,--output", out_counts, "output counts file")->required();

  // extract
  auto* extract = app.add_subcommand("extract", "emit adjacent bigrams as a pair file");
  std::string ex_tokens, ex_out;
  bool ex_lower = false;
  extract->add_option("--tokens", ex_tokens, "token file")->required();
  extract->add_flag("--lowercase", ex_lower, "lowercase all tokens");
  extract->add_option("-o,--output", ex_out, "output pair file")->required();

  // train-backoff
  auto* train = app.add_subcommand("train-backoff", "build a Katz back-off model");
  std::string tb_counts, tb_out;
  Count tb_ceiling = 5;
  bool tb_singletons = false;
  train->add_option("--counts", tb_counts, "counts file")->required();
  train->add_option("--gt-ceiling", tb_ceiling, "Good-Turing discount ceiling");
  train->add_flag("--singletons-as-unseen", tb_singletons,
                  "treat count-1 pairs as unseen");
  train->add_option("-o,--output", tb_out, "output model file")->required();

  // neighbors
  auto* neighbors = app.add_subcommand("neighbors", "build a nearest-neighbor graph");
  std::string nb_counts, nb_model, nb_measure = "a", nb_base = "10", nb_out;
  std::size_t nb_k = 0;
  double nb_t = kInfinity, nb_beta = 1.0;
  unsigned nb_workers = std::thread::hardware_concurrency();
  neighbors->add_option("--counts", nb_counts, "counts file")->required();
  neighbors->add_option("--model", nb_model, "back-off model (required for kl)");
  neighbors->add_option("--measure", nb_measure, "kl, a, l1, or confusion");
  neighbors->add_option("--k", nb_k, "max neighbors per object (0 = all)");
  neighbors->add_option("--t", nb_t, "distance threshold");
  neighbors->add_option("--beta", nb_beta, "weight exponent");
  neighbors->add_option("--log-base", nb_base, "10, e, or a number");
  neighbors->add_option("--workers", nb_workers, "parallel row workers");
  neighbors->add_option("-o,--output", nb_out, "output graph file")->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "deterministic-annealing soft clustering");
  std::string cl_counts, cl_prior = "uniform", cl_prefix;
  AnnealingSchedule cl_schedule;
  cl_schedule.workers = std::max(1u, std::thread::hardware_concurrency());
  std::size_t cl_clusters = 0, cl_top_m = 10;
  cluster->add_option("--counts", cl_counts, "counts file")->required();
  cluster->add_option("--beta0", cl_schedule.beta0, "initial inverse temperature");
  cluster->add_option("--growth", cl_schedule.growth_factor, "beta growth factor");
  cluster->add_option("--shrink", cl_schedule.shrink_factor, "overshoot shrink factor");
  cluster->add_option("--beta-max", cl_schedule.beta_max, "final inverse temperature");
  cluster->add_option("--max-em-iter", cl_schedule.max_em_iterations, "EM iteration cap");
  cluster->add_option("--em-tol", cl_schedule.convergence_tol, "EM convergence tolerance");
  cluster->add_option("--eps", cl_schedule.perturbation_eps, "twin perturbation size");
  cluster->add_option("--split-threshold", cl_schedule.split_threshold,
                      "symmetrized KL split threshold");
  cluster->add_option("--seed", cl_schedule.seed, "random seed");
  cluster->add_option("--workers", cl_schedule.workers, "parallel update workers");
  cluster->add_option("--clusters", cl_clusters, "stop at this many leaves (0 = beta-max)");
  cluster->add_option("--prior", cl_prior, "uniform or marginal");
  cluster->add_option("--top-m", cl_top_m, "contexts listed per centroid");
  cluster->add_option("-o,--output", cl_prefix, "output prefix")->required();

  // prob
  auto* prob = app.add_subcommand("prob", "print one conditional probability");
  EstimatorArgs prob_args;
  std::string prob_object, prob_context;
  prob_args.attach(prob, true);
  prob->add_option("object", prob_object, "conditioning word")->required();
  prob->add_option("context", prob_context, "conditioned word")->required();

  // eval-pseudo
  auto* pseudo = app.add_subcommand("eval-pseudo", "pseudo-word disambiguation error rate");
  EstimatorArgs pseudo_args;
  std::string pseudo_test, pseudo_report, pseudo_manifest;
  std::uint64_t pseudo_seed = 0;
  pseudo_args.attach(pseudo, true);
  pseudo->add_option("--test", pseudo_test, "test occurrence pair file")->required();
  pseudo->add_option("--seed", pseudo_seed, "pseudo-word pairing seed");
  pseudo->add_option("--report", pseudo_report, "report TSV path");
  pseudo->add_option("--save-manifest", pseudo_manifest,
                     "write a similarity-model manifest here");

  // eval-ppl
  auto* ppl = app.add_subcommand("eval-ppl", "perplexity, overall and unseen-only");
  EstimatorArgs ppl_args;
  std::string ppl_test, ppl_report;
  ppl_args.attach(ppl, true);
  ppl->add_option("--test", ppl_test, "test occurrence pair file")->required();
  ppl->add_option("--report", ppl_report, "report TSV path");

  // eval-decision
  auto* decision = app.add_subcommand("eval-decision",
                                      "two-alternative decision task on deleted pairs");
  std::string dc_counts, dc_report;
  DecisionTaskOptions dc_options;
  AnnealingSchedule dc_schedule;
  std::size_t dc_clusters = 3;
  decision->add_option("--counts", dc_counts, "counts file")->required();
  decision->add_option("--num-pairs", dc_options.num_pairs, "pairs to delete");
  decision->add_option("--freq-lo", dc_options.freq_window_lo, "context frequency window low");
  decision->add_option("--freq-hi", dc_options.freq_window_hi,
                       "context frequency window high");
  decision->add_option("--seed", dc_options.seed, "random seed");
  decision->add_option("--clusters", dc_clusters, "cluster model size");
  decision->add_option("--beta-max", dc_schedule.beta_max, "annealing limit");
  decision->add_option("--report", dc_report, "report TSV path");

  // grid-search
  auto* grid = app.add_subcommand("grid-search", "tune k, t, beta, gamma for the sim model");
  std::string gs_counts, gs_model, gs_tune, gs_test, gs_objective = "error", gs_measure = "a";
  std::string gs_k = "10", gs_t = "inf", gs_beta = "2", gs_gamma = "0.15", gs_report;
  std::uint64_t gs_seed = 0;
  unsigned gs_workers = std::thread::hardware_concurrency();
  grid->add_option("--counts", gs_counts, "training counts")->required();
  grid->add_option("--model", gs_model, "back-off model")->required();
  grid->add_option("--tune", gs_tune, "tuning occurrence pair file")->required();
  grid->add_option("--test", gs_test, "held-out occurrence pair file for the test column");
  grid->add_option("--objective", gs_objective, "error, ppl, or ppl-unseen");
  grid->add_option("--measure", gs_measure, "kl, a, l1, or confusion");
  grid->add_option("--k-grid", gs_k, "comma-separated k values");
  grid->add_option("--t-grid", gs_t, "comma-separated t values");
  grid->add_option("--beta-grid", gs_beta, "comma-separated beta values");
  grid->add_option("--gamma-grid", gs_gamma, "comma-separated gamma values");
  grid->add_option("--seed", gs_seed, "pseudo-word pairing seed");
  grid->add_option("--workers", gs_workers, "parallel graph workers");
  grid->add_option("--report", gs_report, "report TSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest) {
      if (in_pairs.empty() == in_tokens.empty())
        throw DataError("pass exactly one of --pairs or --tokens");
      return run_ingest(in_pairs, in_tokens, lowercase, top_objects, drop_singletons,
                        out_counts);
    }
    if (*extract) return run_extract(ex_tokens, ex_lower, ex_out);
    if (*train) return run_train_backoff(tb_counts, tb_ceiling, tb_singletons, tb_out);
    if (*neighbors)
      return run_neighbors(nb_counts, nb_model, nb_measure, nb_k, nb_t, nb_beta, nb_base,
                           nb_workers, nb_out);
    if (*cluster)
      return run_cluster(cl_counts, cl_schedule, cl_clusters, cl_prior, cl_top_m, cl_prefix);
    if (*prob) return run_prob(prob_args, prob_object, prob_context);
    if (*pseudo)
      return run_eval_pseudo(pseudo_args, pseudo_test, pseudo_seed, pseudo_report,
                             pseudo_manifest);
    if (*ppl) return run_eval_ppl(ppl_args, ppl_test, ppl_report);
    if (*decision)
      return run_eval_decision(dc_counts, dc_options, dc_clusters, dc_schedule, dc_report);
    if (*grid)
      return run_grid_search(gs_counts, gs_model, gs_tune, gs_test, gs_objective, gs_measure,
                             gs_k, gs_t, gs_beta, gs_gamma, gs_seed, gs_workers, gs_report);
    throw DataError("no subcommand selected");
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
