// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/confusion.hpp"
#include "distsim/divergence.hpp"
#include "distsim/estimators.hpp"
#include "distsim/pair_counts.hpp"
#include "distsim/parallel.hpp"
#include "distsim/sparse_distribution.hpp"

namespace distsim {

/// Measures usable for neighbor retrieval and weighting.  KL requires
/// smoothed base rows (its off-support value is infinite); the others run
/// on plain MLE rows.
enum class Measure { kKL, kTotalDivergence, kL1, kConfusion };

inline const char* measure_name(Measure m) {
  switch (m) {
    case Measure::kKL: return "kl";
    case Measure::kTotalDivergence: return "a";
    case Measure::kL1: return "l1";
    case Measure::kConfusion: return "confusion";
  }
  throw DataError("unknown measure tag");
}

inline Measure parse_measure(const std::string& tag) {
  if (tag == "kl") return Measure::kKL;
  if (tag == "a") return Measure::kTotalDivergence;
  if (tag == "l1") return Measure::kL1;
  if (tag == "confusion") return Measure::kConfusion;
  throw DataError("unknown measure tag '" + tag + "'");
}

/// Similarity weight from the measure's raw value:
///   W_D  = b^(-beta D)     W_A  = b^(-beta A)
///   W_L1 = (2 - L1)^beta   W_C  = P_C itself (beta unused)
inline double similarity_weight(Measure measure, double value, double beta,
                                LogBase base = LogBase::base10()) {
  switch (measure) {
    case Measure::kKL:
    case Measure::kTotalDivergence:
      if (!(beta > 0.0)) throw DataError("weight exponent beta must be positive");
      return std::isinf(value) ? 0.0 : base.exp(-beta * value);
    case Measure::kL1: {
      if (!(beta > 0.0)) throw DataError("weight exponent beta must be positive");
      double margin = 2.0 - value;
      if (margin < 0.0) margin = 0.0;
      return std::pow(margin, beta);
    }
    case Measure::kConfusion:
      return value;
  }
  throw DataError("unknown measure tag");
}

struct NeighborEntry {
  ObjectId neighbor;
  double distance;  // raw measure value; for confusion, the negated P_C
  double weight;

  bool operator==(const NeighborEntry&) const = default;
};

struct NeighborParams {
  Measure measure = Measure::kTotalDivergence;
  std::size_t k = 0;   // 0 means no truncation
  double t = kInfinity;
  double beta = 1.0;
  LogBase base = LogBase::base10();
};

/// Per-object ranked neighbor lists: ascending distance, ties broken by
/// ascending id, self always excluded, at most k entries per row, every
/// stored distance below t.
class NeighborGraph {
 public:
  NeighborGraph() = default;
  NeighborGraph(NeighborParams params, std::size_t vocab_size)
      : params_(params), rows_(vocab_size) {}

  const NeighborParams& params() const { return params_; }

  const std::vector<NeighborEntry>& row(ObjectId x) const {
    static const std::vector<NeighborEntry> kEmpty;
    return x < rows_.size() ? rows_[x] : kEmpty;
  }

  void set_row(ObjectId x, std::vector<NeighborEntry> row) {
    if (x >= rows_.size()) rows_.resize(x + 1);
    rows_[x] = std::move(row);
  }

  std::size_t size() const { return rows_.size(); }

  std::vector<ObjectId> objects_with_rows() const {
    std::vector<ObjectId> out;
    for (ObjectId x = 0; x < rows_.size(); ++x)
      if (!rows_[x].empty()) out.push_back(x);
    return out;
  }

  bool operator==(const NeighborGraph& other) const {
    return rows_ == other.rows_ && params_.measure == other.params_.measure &&
           params_.k == other.params_.k && params_.t == other.params_.t &&
           params_.beta == other.params_.beta;
  }

 private:
  NeighborParams params_;
  std::vector<std::vector<NeighborEntry>> rows_;
};

/// One row of nearest neighbors of x under the measure.  `rows` supplies
/// the base distribution per object (MLE or smoothed, bound to the measure
/// by the caller).
inline std::vector<NeighborEntry> nearest_neighbors_of(
    const PairCounts& counts, const std::vector<SparseDistribution>* rows,
    const ContextIndex* index, ObjectId x, const NeighborParams& params) {
  if (!std::binary_search(counts.object_ids().begin(), counts.object_ids().end(), x))
    throw DataError("unknown object id " + std::to_string(x));
  std::vector<NeighborEntry> entries;
  if (params.k == 0) return entries;

  if (params.measure == Measure::kConfusion) {
    ContextIndex local(counts);
    const ContextIndex& idx = index ? *index : local;
    for (const auto& [xp, pc] : confusion_row(counts, idx, x)) {
      if (xp == x) continue;
      double distance = -pc;
      if (!(distance < params.t)) continue;
      entries.push_back({xp, distance, similarity_weight(params.measure, pc, params.beta,
                                                         params.base)});
    }
  } else {
    const SparseDistribution& qx = (*rows)[x];
    for (ObjectId xp : counts.object_ids()) {
      if (xp == x) continue;
      const SparseDistribution& qp = (*rows)[xp];
      double distance;
      switch (params.measure) {
        case Measure::kKL: distance = kl_divergence(qx, qp, params.base); break;
        case Measure::kTotalDivergence:
          distance = total_divergence_to_mean(qx, qp, params.base);
          break;
        case Measure::kL1: distance = l1_distance(qx, qp); break;
        default: throw DataError("unknown measure tag");
      }
      if (!(distance < params.t)) continue;
      entries.push_back({xp, distance,
                         similarity_weight(params.measure, distance, params.beta, params.base)});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const NeighborEntry& a, const NeighborEntry& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.neighbor < b.neighbor;
  });
  if (entries.size() > params.k) entries.resize(params.k);
  return entries;
}

/// Build all rows.  For the KL measure a back-off model must be supplied;
/// its smoothed rows are the base distributions.  Rows are independent, so
/// they are computed in parallel when workers > 1; the result does not
/// depend on the worker count.
inline NeighborGraph build_neighbor_graph(const PairCounts& counts, const NeighborParams& params,
                                          const BackoffModel* smoothed = nullptr,
                                          unsigned workers = 1) {
  if (params.measure == Measure::kKL && smoothed == nullptr)
    throw DataError("KL neighbor retrieval needs a smoothed base model");

  std::vector<SparseDistribution> rows;
  if (params.measure != Measure::kConfusion) {
    rows.resize(counts.vocab().size());
    for (ObjectId x : counts.object_ids())
      rows[x] = params.measure == Measure::kKL ? smoothed->smoothed_row(x) : mle_row(counts, x);
  }
  ContextIndex index(counts);

  NeighborGraph graph(params, counts.vocab().size());
  const auto& objects = counts.object_ids();
  parallel_for(objects.size(), workers, [&](std::size_t i) {
    ObjectId x = objects[i];
    graph.set_row(x, nearest_neighbors_of(counts, &rows, &index, x, params));
  });
  return graph;
}

// --- text round-trip -------------------------------------------------------

namespace detail {

inline std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// One row per line: object, then (neighbor, distance, weight) triples,
/// tab-separated, full decimal precision.  A header line carries the
/// parameters so the file round-trips exactly.
inline void save_neighbor_graph(std::ostream& out, const NeighborGraph& graph,
                                const Vocabulary& vocab) {
  const NeighborParams& p = graph.params();
  out << "#distsim-neighbors\tv1\t" << measure_name(p.measure) << '\t' << p.k << '\t'
      << detail::full_precision(p.t) << '\t' << detail::full_precision(p.beta) << '\t'
      << detail::full_precision(p.base.ln_base) << '\n';
  for (ObjectId x : graph.objects_with_rows()) {
    out << vocab.surface(x);
    for (const NeighborEntry& e : graph.row(x))
      out << '\t' << vocab.surface(e.neighbor) << '\t' << detail::full_precision(e.distance)
          << '\t' << detail::full_precision(e.weight);
    out << '\n';
  }
}

inline NeighborGraph load_neighbor_graph(std::istream& in, const Vocabulary& vocab) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty neighbor graph file");
  std::istringstream header(line);
  std::string magic, version, tag, t_field, beta_field, base_field;
  NeighborParams params;
  header >> magic >> version >> tag >> params.k >> t_field >> beta_field >> base_field;
  if (magic != "#distsim-neighbors" || version != "v1" || header.fail())
    throw DataError("not a neighbor graph file");
  params.measure = parse_measure(tag);
  params.t = std::strtod(t_field.c_str(), nullptr);
  params.beta = std::strtod(beta_field.c_str(), nullptr);
  params.base.ln_base = std::strtod(base_field.c_str(), nullptr);

  NeighborGraph graph(params, vocab.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string object;
    std::getline(fields, object, '\t');
    auto x = vocab.find(object);
    if (!x) throw DataError("line " + std::to_string(line_no) + ": unknown object '" + object + "'");
    std::vector<NeighborEntry> row;
    std::string name, dist, weight;
    while (std::getline(fields, name, '\t')) {
      if (!std::getline(fields, dist, '\t') || !std::getline(fields, weight, '\t'))
        throw DataError("line " + std::to_string(line_no) + ": incomplete neighbor triple");
      auto xp = vocab.find(name);
      if (!xp)
        throw DataError("line " + std::to_string(line_no) + ": unknown neighbor '" + name + "'");
      row.push_back({*xp, std::strtod(dist.c_str(), nullptr), std::strtod(weight.c_str(), nullptr)});
    }
    graph.set_row(*x, std::move(row));
  }
  return graph;
}

}  // namespace distsim
