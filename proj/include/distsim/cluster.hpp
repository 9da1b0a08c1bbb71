// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/model.hpp"
#include "distsim/pair_counts.hpp"
#include "distsim/parallel.hpp"
#include "distsim/sparse_distribution.hpp"

namespace distsim {

enum class PriorMode { kUniform, kMarginal };

/// The immutable data being clustered: object distributions, the object
/// prior P(x), and the sorted union of the supports.  Centroids live on
/// the union support, where they stay strictly positive.
struct ClusterInput {
  std::vector<ObjectId> object_ids;
  std::vector<SparseDistribution> objects;
  std::vector<double> prior;
  std::vector<ContextId> union_support;
  /// For each object, the position in union_support of each support entry.
  std::vector<std::vector<std::uint32_t>> support_positions;

  std::size_t num_objects() const { return objects.size(); }
  std::size_t support_size() const { return union_support.size(); }

  /// Position of a context in the union support, or -1.
  std::ptrdiff_t position_of(ContextId y) const {
    auto it = std::lower_bound(union_support.begin(), union_support.end(), y);
    if (it == union_support.end() || *it != y) return -1;
    return it - union_support.begin();
  }
};

inline ClusterInput make_cluster_input(std::vector<ObjectId> ids,
                                       std::vector<SparseDistribution> objects,
                                       std::vector<double> prior) {
  if (objects.empty()) throw DataError("cannot cluster an empty object set");
  if (ids.size() != objects.size() || prior.size() != objects.size())
    throw DataError("cluster input sizes disagree");
  double prior_mass = 0.0;
  for (double p : prior) {
    if (!(p > 0.0)) throw DataError("object prior must be strictly positive");
    prior_mass += p;
  }
  ClusterInput input;
  input.object_ids = std::move(ids);
  input.objects = std::move(objects);
  input.prior = std::move(prior);
  for (double& p : input.prior) p /= prior_mass;

  for (const SparseDistribution& q : input.objects)
    for (const auto& [y, p] : q.support()) input.union_support.push_back(y);
  std::sort(input.union_support.begin(), input.union_support.end());
  input.union_support.erase(
      std::unique(input.union_support.begin(), input.union_support.end()),
      input.union_support.end());

  input.support_positions.reserve(input.objects.size());
  for (const SparseDistribution& q : input.objects) {
    std::vector<std::uint32_t> positions;
    positions.reserve(q.size());
    for (const auto& [y, p] : q.support())
      positions.push_back(static_cast<std::uint32_t>(input.position_of(y)));
    input.support_positions.push_back(std::move(positions));
  }
  return input;
}

inline ClusterInput make_cluster_input(const PairCounts& counts,
                                       PriorMode mode = PriorMode::kUniform) {
  std::vector<ObjectId> ids = counts.object_ids();
  std::vector<SparseDistribution> objects;
  std::vector<double> prior;
  objects.reserve(ids.size());
  prior.reserve(ids.size());
  for (ObjectId x : ids) {
    objects.push_back(mle_row(counts, x));
    prior.push_back(mode == PriorMode::kUniform
                        ? 1.0
                        : static_cast<double>(counts.object_marginal(x)));
  }
  return make_cluster_input(std::move(ids), std::move(objects), std::move(prior));
}

/// A centroid distribution over the union support, its marginal, and its
/// place in the split history.
struct Centroid {
  std::vector<double> probs;
  double marginal = 1.0;
  int id = 0;
  int parent_id = -1;
};

struct ClusterState {
  double beta = 1.0;
  std::vector<Centroid> centroids;
  /// memberships[i][c] for object index i and centroid index c; each row
  /// sums to one and every entry is positive.
  std::vector<std::vector<double>> memberships;

  std::size_t num_centroids() const { return centroids.size(); }
};

struct HierarchyNode {
  int centroid_id = 0;
  int parent_id = -1;
  double beta_at_split = 0.0;
};

struct AnnealingSchedule {
  double beta0 = 1.0;
  double growth_factor = 1.1;
  double shrink_factor = 0.5;  // applied to the last increment on overshoot
  double beta_max = 64.0;
  int max_em_iterations = 200;
  double convergence_tol = 1e-6;
  double perturbation_eps = 1e-3;
  double split_threshold = 1e-2;  // symmetrized KL, nats
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    if (!(beta0 > 0.0)) throw DataError("beta0 must be positive");
    if (!(growth_factor > 1.0)) throw DataError("growth factor must exceed 1");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0))
      throw DataError("shrink factor must lie in (0, 1)");
    if (!(beta_max >= beta0)) throw DataError("beta_max must be at least beta0");
    if (max_em_iterations < 1) throw DataError("need at least one EM iteration");
  }
};

/// d(x, c) = D(P_MLE(.|x) || centroid), in nats.
inline double object_centroid_divergence(const ClusterInput& input, std::size_t obj,
                                         const Centroid& centroid) {
  const auto& support = input.objects[obj].support();
  const auto& positions = input.support_positions[obj];
  double nats = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    double c = centroid.probs[positions[i]];
    if (!(c > 0.0)) return kInfinity;
    double q = support[i].second;
    nats += q * std::log(q / c);
  }
  return nats;
}

/// One centroid equal to the P(x)-weighted average of all objects; every
/// membership is one.
inline ClusterState init_state(const ClusterInput& input, double beta0) {
  if (input.objects.empty()) throw DataError("cannot cluster an empty object set");
  ClusterState state;
  state.beta = beta0;
  Centroid root;
  root.id = 0;
  root.parent_id = -1;
  root.marginal = 1.0;
  root.probs.assign(input.support_size(), 0.0);
  for (std::size_t i = 0; i < input.num_objects(); ++i) {
    const auto& support = input.objects[i].support();
    const auto& positions = input.support_positions[i];
    for (std::size_t j = 0; j < support.size(); ++j)
      root.probs[positions[j]] += input.prior[i] * support[j].second;
  }
  double mass = 0.0;
  for (double p : root.probs) mass += p;
  for (double& p : root.probs) p /= mass;
  state.centroids.push_back(std::move(root));
  state.memberships.assign(input.num_objects(), std::vector<double>(1, 1.0));
  return state;
}

/// Maximum-entropy memberships P(c|x) = exp(-beta d(x,c)) / Z_x, and the
/// centroid marginals they induce.  Rows are independent, so they compute
/// in parallel; the marginal reduction runs after the barrier in object
/// order, so the result does not depend on the worker count.
inline void update_memberships(const ClusterInput& input, ClusterState& state,
                               unsigned workers = 1) {
  std::size_t nc = state.num_centroids();
  std::atomic<bool> nonfinite{false};
  parallel_for(input.num_objects(), workers, [&](std::size_t i) {
    std::vector<double> divergences(nc);
    double min_d = kInfinity;
    for (std::size_t c = 0; c < nc; ++c) {
      double d = object_centroid_divergence(input, i, state.centroids[c]);
      if (!std::isfinite(d)) {
        nonfinite = true;
        return;
      }
      divergences[c] = d;
      min_d = std::min(min_d, d);
    }
    std::vector<double>& row = state.memberships[i];
    row.resize(nc);
    double z = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      row[c] = std::exp(-state.beta * (divergences[c] - min_d));
      z += row[c];
    }
    for (std::size_t c = 0; c < nc; ++c) row[c] /= z;
  });
  if (nonfinite)
    throw DataError("non-finite divergence to a centroid; centroid positivity violated");
  std::vector<double> new_marginals(nc, 0.0);
  for (std::size_t i = 0; i < input.num_objects(); ++i)
    for (std::size_t c = 0; c < nc; ++c)
      new_marginals[c] += state.memberships[i][c] * input.prior[i];
  for (std::size_t c = 0; c < nc; ++c) state.centroids[c].marginal = new_marginals[c];
}

/// Minimum-distortion centroids: the average of the object distributions
/// weighted by the Bayes inverses P(x|c) = P(c|x) P(x) / P(c).  Centroids
/// are independent given the memberships, so they update in parallel;
/// each one accumulates its objects in index order.
inline void update_centroids(const ClusterInput& input, ClusterState& state,
                             unsigned workers = 1) {
  std::size_t nc = state.num_centroids();
  std::vector<double> marginals(nc, 0.0);
  for (std::size_t i = 0; i < input.num_objects(); ++i)
    for (std::size_t c = 0; c < nc; ++c)
      marginals[c] += state.memberships[i][c] * input.prior[i];
  for (std::size_t c = 0; c < nc; ++c) {
    if (!(marginals[c] > 0.0))
      throw DataError("centroid marginal vanished; corrupted cluster state");
    state.centroids[c].marginal = marginals[c];
  }
  parallel_for(nc, workers, [&](std::size_t c) {
    std::vector<double>& probs = state.centroids[c].probs;
    std::fill(probs.begin(), probs.end(), 0.0);
    for (std::size_t i = 0; i < input.num_objects(); ++i) {
      double weight = state.memberships[i][c] * input.prior[i] / marginals[c];
      const auto& support = input.objects[i].support();
      const auto& positions = input.support_positions[i];
      for (std::size_t j = 0; j < support.size(); ++j)
        probs[positions[j]] += weight * support[j].second;
    }
    double mass = 0.0;
    for (double p : probs) mass += p;
    for (double& p : probs) p /= mass;
  });
}

struct EnergyReport {
  double distortion = 0.0;
  double entropy = 0.0;
  double free_energy = 0.0;
};

/// D = sum_x P(x) sum_c P(c|x) d(x,c), H = average membership entropy,
/// F = D - H / beta.  All in nats.
inline EnergyReport energy_report(const ClusterInput& input, const ClusterState& state) {
  EnergyReport report;
  for (std::size_t i = 0; i < input.num_objects(); ++i) {
    double px = input.prior[i];
    const std::vector<double>& row = state.memberships[i];
    for (std::size_t c = 0; c < state.num_centroids(); ++c) {
      double m = row[c];
      if (m <= 0.0) continue;
      report.distortion += px * m * object_centroid_divergence(input, i, state.centroids[c]);
      report.entropy -= px * m * std::log(m);
    }
  }
  report.free_energy = report.distortion - report.entropy / state.beta;
  return report;
}

/// F = -(1/beta) sum_x P(x) log Z_x; agrees with energy_report exactly at
/// maximum-entropy memberships, i.e. right after update_memberships.
inline double free_energy_via_partition(const ClusterInput& input, const ClusterState& state) {
  double total = 0.0;
  std::vector<double> divergences(state.num_centroids());
  for (std::size_t i = 0; i < input.num_objects(); ++i) {
    double min_d = kInfinity;
    for (std::size_t c = 0; c < state.num_centroids(); ++c) {
      divergences[c] = object_centroid_divergence(input, i, state.centroids[c]);
      min_d = std::min(min_d, divergences[c]);
    }
    double z_shifted = 0.0;
    for (double d : divergences) z_shifted += std::exp(-state.beta * (d - min_d));
    double log_z = -state.beta * min_d + std::log(z_shifted);
    total += input.prior[i] * log_z;
  }
  return -total / state.beta;
}

struct EmResult {
  bool converged = false;
  int cycles = 0;
};

/// Alternate membership and centroid updates at fixed beta until the
/// largest parameter change drops below the tolerance.  Free energy is
/// non-increasing across each full cycle.
inline EmResult em_fixed_beta(const ClusterInput& input, ClusterState& state,
                              const AnnealingSchedule& schedule) {
  EmResult result;
  for (int cycle = 0; cycle < schedule.max_em_iterations; ++cycle) {
    ClusterState previous = state;
    update_memberships(input, state, schedule.workers);
    update_centroids(input, state, schedule.workers);
    result.cycles = cycle + 1;
    double delta = 0.0;
    for (std::size_t i = 0; i < state.memberships.size(); ++i) {
      if (previous.memberships[i].size() != state.memberships[i].size()) {
        delta = kInfinity;
        break;
      }
      for (std::size_t c = 0; c < state.memberships[i].size(); ++c)
        delta = std::max(delta,
                         std::abs(state.memberships[i][c] - previous.memberships[i][c]));
    }
    for (std::size_t c = 0; c < state.num_centroids() && std::isfinite(delta); ++c)
      for (std::size_t j = 0; j < state.centroids[c].probs.size(); ++j)
        delta = std::max(delta, std::abs(state.centroids[c].probs[j] -
                                         previous.centroids[c].probs[j]));
    if (delta < schedule.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// P(y|x) = sum_c P(c|x) P(y|c) for a clustered object (by index).
inline double cluster_conditional_prob(const ClusterInput& input, const ClusterState& state,
                                       std::size_t obj, ContextId y) {
  if (obj >= input.num_objects()) throw DataError("object index out of range");
  std::ptrdiff_t pos = input.position_of(y);
  if (pos < 0) return 0.0;
  double p = 0.0;
  for (std::size_t c = 0; c < state.num_centroids(); ++c)
    p += state.memberships[obj][c] * state.centroids[c].probs[static_cast<std::size_t>(pos)];
  return p;
}

/// Membership row for a distribution that was not clustered; requires the
/// centroids to be positive on its support, which holds whenever the
/// support lies inside the union support.
inline std::vector<double> membership_for_new_object(const ClusterInput& input,
                                                     const ClusterState& state,
                                                     const SparseDistribution& dist) {
  std::size_t nc = state.num_centroids();
  std::vector<double> divergences(nc);
  double min_d = kInfinity;
  for (std::size_t c = 0; c < nc; ++c) {
    const Centroid& centroid = state.centroids[c];
    double nats = 0.0;
    for (const auto& [y, q] : dist.support()) {
      std::ptrdiff_t pos = input.position_of(y);
      double cp = pos < 0 ? 0.0 : centroid.probs[static_cast<std::size_t>(pos)];
      if (!(cp > 0.0))
        throw DataError("centroid not positive on the new object's support");
      nats += q * std::log(q / cp);
    }
    divergences[c] = nats;
    min_d = std::min(min_d, nats);
  }
  std::vector<double> row(nc);
  double z = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    row[c] = std::exp(-state.beta * (divergences[c] - min_d));
    z += row[c];
  }
  for (double& m : row) m /= z;
  return row;
}

namespace detail {

inline double symmetrized_kl(const std::vector<double>& a, const std::vector<double>& b) {
  double nats = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nats += a[i] * std::log(a[i] / b[i]);
    nats += b[i] * std::log(b[i] / a[i]);
  }
  return nats;
}

inline Centroid perturbed_twin(const Centroid& parent, double eps, std::mt19937_64& rng) {
  Centroid twin = parent;
  double mass = 0.0;
  for (double& p : twin.probs) {
    double u = 2.0 * (static_cast<double>(rng()) /
                      static_cast<double>(std::mt19937_64::max())) -
               1.0;
    p *= 1.0 + eps * u;
    mass += p;
  }
  for (double& p : twin.probs) p /= mass;
  return twin;
}

}  // namespace detail

struct ClusterSnapshot {
  double beta = 0.0;
  ClusterState state;
};

struct AnnealResult {
  std::vector<ClusterSnapshot> snapshots;
  std::vector<HierarchyNode> hierarchy;
  /// Distribution each centroid last had: at its split for internal nodes,
  /// final for leaves.
  std::map<int, std::vector<double>> node_distributions;
  ClusterState final_state;
};

/// Deterministic-annealing hierarchy: at each beta every centroid gets a
/// perturbed twin, EM runs to convergence, and a twin pair whose
/// symmetrized KL exceeds the threshold has split.  More than one split
/// means beta rose too quickly: the last increment is partially undone and
/// the phase retried once, after which simultaneous splits are accepted.
inline AnnealResult anneal(const ClusterInput& input, const AnnealingSchedule& schedule,
                           std::size_t target_leaves = 0) {
  schedule.validate();
  std::mt19937_64 rng(schedule.seed);

  AnnealResult result;
  ClusterState state = init_state(input, schedule.beta0);
  update_memberships(input, state);
  result.snapshots.push_back({state.beta, state});
  if (target_leaves == 1) {
    result.final_state = std::move(state);
    return result;
  }
  result.hierarchy.push_back({0, -1, 0.0});

  int next_id = 1;
  double last_increment = 0.0;
  bool retried_shrink = false;

  while (target_leaves == 0 || state.num_centroids() < target_leaves) {
    // Twin phase at the current beta.
    ClusterState twin_state;
    twin_state.beta = state.beta;
    std::size_t pairs = state.num_centroids();
    for (std::size_t c = 0; c < pairs; ++c) {
      twin_state.centroids.push_back(state.centroids[c]);
      twin_state.centroids.push_back(
          detail::perturbed_twin(state.centroids[c], schedule.perturbation_eps, rng));
    }
    twin_state.memberships.assign(input.num_objects(),
                                  std::vector<double>(twin_state.num_centroids(), 0.0));
    em_fixed_beta(input, twin_state, schedule);

    std::vector<std::size_t> split_pairs;
    for (std::size_t c = 0; c < pairs; ++c) {
      double divergence = detail::symmetrized_kl(twin_state.centroids[2 * c].probs,
                                                 twin_state.centroids[2 * c + 1].probs);
      if (divergence > schedule.split_threshold) split_pairs.push_back(c);
    }

    if (split_pairs.size() > 1 && !retried_shrink && last_increment > 0.0) {
      state.beta -= schedule.shrink_factor * last_increment;
      retried_shrink = true;
      continue;
    }

    if (!split_pairs.empty()) {
      ClusterState accepted;
      accepted.beta = state.beta;
      std::size_t split_cursor = 0;
      for (std::size_t c = 0; c < pairs; ++c) {
        bool split = split_cursor < split_pairs.size() && split_pairs[split_cursor] == c;
        int parent_id = state.centroids[c].id;
        if (split) {
          ++split_cursor;
          result.node_distributions[parent_id] = state.centroids[c].probs;
          for (int side = 0; side < 2; ++side) {
            Centroid child = twin_state.centroids[2 * c + static_cast<std::size_t>(side)];
            child.id = next_id++;
            child.parent_id = parent_id;
            result.hierarchy.push_back({child.id, parent_id, state.beta});
            accepted.centroids.push_back(std::move(child));
          }
        } else {
          Centroid kept = twin_state.centroids[2 * c];
          kept.id = parent_id;
          kept.parent_id = state.centroids[c].parent_id;
          accepted.centroids.push_back(std::move(kept));
        }
      }
      accepted.memberships.assign(input.num_objects(),
                                  std::vector<double>(accepted.num_centroids(), 0.0));
      state = std::move(accepted);
      em_fixed_beta(input, state, schedule);
      result.snapshots.push_back({state.beta, state});
      retried_shrink = false;
      if (target_leaves != 0 && state.num_centroids() >= target_leaves) break;
    } else {
      for (std::size_t c = 0; c < pairs; ++c) {
        Centroid kept = twin_state.centroids[2 * c];
        kept.id = state.centroids[c].id;
        kept.parent_id = state.centroids[c].parent_id;
        state.centroids[c] = std::move(kept);
      }
      update_memberships(input, state);
      retried_shrink = false;
    }

    if (state.beta >= schedule.beta_max) break;
    double new_beta = std::min(state.beta * schedule.growth_factor, schedule.beta_max);
    last_increment = new_beta - state.beta;
    state.beta = new_beta;
  }

  for (const Centroid& centroid : state.centroids)
    result.node_distributions[centroid.id] = centroid.probs;
  result.final_state = std::move(state);
  return result;
}

/// Conditional-model adapter over a cluster state, keyed by object id.
class ClusterModel : public ConditionalModel {
 public:
  ClusterModel(const ClusterInput& input, const ClusterState& state)
      : input_(&input), state_(&state) {}

  double prob(ObjectId x, ContextId y) const override {
    auto it = std::lower_bound(input_->object_ids.begin(), input_->object_ids.end(), x);
    if (it == input_->object_ids.end() || *it != x)
      throw DataError("object id " + std::to_string(x) + " was not clustered");
    std::size_t obj = static_cast<std::size_t>(it - input_->object_ids.begin());
    return cluster_conditional_prob(*input_, *state_, obj, y);
  }

 private:
  const ClusterInput* input_;
  const ClusterState* state_;
};

// --- exports ---------------------------------------------------------------

/// Nodes (id, parent, betaAtSplit) followed by each node's top-m contexts.
inline void save_hierarchy(std::ostream& out, const AnnealResult& result,
                           const ClusterInput& input, const Vocabulary& vocab,
                           std::size_t top_m = 10) {
  out << "#distsim-hierarchy\tv1\n";
  for (const HierarchyNode& node : result.hierarchy)
    out << "node\t" << node.centroid_id << '\t' << node.parent_id << '\t'
        << node.beta_at_split << '\n';
  for (const auto& [id, probs] : result.node_distributions) {
    std::vector<std::size_t> order(probs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    out << "centroid\t" << id;
    for (std::size_t i = 0; i < std::min(top_m, order.size()); ++i)
      out << '\t' << vocab.surface(input.union_support[order[i]]) << '\t' << probs[order[i]];
    out << '\n';
  }
}

/// Tab-separated (object, centroid, probability) rows.
inline void save_memberships(std::ostream& out, const ClusterInput& input,
                             const ClusterState& state, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < input.num_objects(); ++i)
    for (std::size_t c = 0; c < state.num_centroids(); ++c)
      out << vocab.surface(input.object_ids[i]) << '\t' << state.centroids[c].id << '\t'
          << state.memberships[i][c] << '\n';
}

}  // namespace distsim
