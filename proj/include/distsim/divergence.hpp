// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "distsim/common.hpp"
#include "distsim/sparse_distribution.hpp"

namespace distsim {

/// D(q || r) = sum_y q(y) log(q(y)/r(y)), with 0 log(0/r) = 0 and
/// q log(q/0) = +infinity.  Infinity is a value, not an error.
inline double kl_divergence(const SparseDistribution& q, const SparseDistribution& r,
                            LogBase base = LogBase::base10()) {
  double nats = 0.0;
  const auto& qs = q.support();
  const auto& rs = r.support();
  std::size_t j = 0;
  for (const auto& [y, qv] : qs) {
    while (j < rs.size() && rs[j].first < y) ++j;
    if (j == rs.size() || rs[j].first != y) return kInfinity;
    nats += qv * std::log(qv / rs[j].second);
  }
  return nats / base.ln_base;
}

/// H(q) = -sum_y q(y) log q(y).
inline double entropy(const SparseDistribution& q, LogBase base = LogBase::base10()) {
  double nats = 0.0;
  for (const auto& [y, qv] : q.support()) nats -= qv * std::log(qv);
  return nats / base.ln_base;
}

/// Total divergence to the mean, A(q, r) = D(q||m) + D(r||m) with
/// m = (q + r)/2, computed by the Both-only form
/// 2 log 2 + sum_{y in Both} { q log(q/(q+r)) + r log(r/(q+r)) }.
/// Symmetric, bounded by 2 log 2, the bound attained exactly when the
/// supports are disjoint.
inline double total_divergence_to_mean(const SparseDistribution& q, const SparseDistribution& r,
                                       LogBase base = LogBase::base10()) {
  double nats = 2.0 * std::numbers::ln2;
  const auto& qs = q.support();
  const auto& rs = r.support();
  std::size_t i = 0, j = 0;
  while (i < qs.size() && j < rs.size()) {
    if (qs[i].first < rs[j].first) {
      ++i;
    } else if (rs[j].first < qs[i].first) {
      ++j;
    } else {
      double qv = qs[i].second, rv = rs[j].second, sum = qv + rv;
      double tq = qv * std::log(qv / sum);
      double tr = rv * std::log(rv / sum);
      // Order-independent accumulation: A(q, r) == A(r, q) exactly.
      nats += std::min(tq, tr);
      nats += std::max(tq, tr);
      ++i;
      ++j;
    }
  }
  if (nats < 0.0) nats = 0.0;
  return nats / base.ln_base;
}

/// L1 (Manhattan) distance via the Both-only form
/// 2 + sum_{y in Both} (|q - r| - q - r); in [0, 2], equal to 2 exactly
/// when the supports are disjoint.
inline double l1_distance(const SparseDistribution& q, const SparseDistribution& r) {
  double d = 2.0;
  const auto& qs = q.support();
  const auto& rs = r.support();
  std::size_t i = 0, j = 0;
  while (i < qs.size() && j < rs.size()) {
    if (qs[i].first < rs[j].first) {
      ++i;
    } else if (rs[j].first < qs[i].first) {
      ++j;
    } else {
      double qv = qs[i].second, rv = rs[j].second;
      d += std::abs(qv - rv) - (qv + rv);
      ++i;
      ++j;
    }
  }
  if (d < 0.0) d = 0.0;
  return d;
}

/// Euclidean distance over the union of the supports.  Reference measure
/// only; nothing downstream models with it.
inline double l2_distance(const SparseDistribution& q, const SparseDistribution& r) {
  double sq = 0.0;
  const auto& qs = q.support();
  const auto& rs = r.support();
  std::size_t i = 0, j = 0;
  while (i < qs.size() || j < rs.size()) {
    if (j == rs.size() || (i < qs.size() && qs[i].first < rs[j].first)) {
      sq += qs[i].second * qs[i].second;
      ++i;
    } else if (i == qs.size() || rs[j].first < qs[i].first) {
      sq += rs[j].second * rs[j].second;
      ++j;
    } else {
      double diff = qs[i].second - rs[j].second;
      sq += diff * diff;
      ++i;
      ++j;
    }
  }
  return std::sqrt(sq);
}

/// cos(q, r) = sum_{y in Both} q(y) r(y) / (||q|| ||r||); 1 iff q = r,
/// 0 iff the supports are disjoint.
inline double cosine(const SparseDistribution& q, const SparseDistribution& r) {
  if (q.l2_norm() == 0.0 || r.l2_norm() == 0.0)
    throw DataError("cosine of a zero-norm vector; corrupt distribution");
  double dot = 0.0;
  const auto& qs = q.support();
  const auto& rs = r.support();
  std::size_t i = 0, j = 0;
  while (i < qs.size() && j < rs.size()) {
    if (qs[i].first < rs[j].first) {
      ++i;
    } else if (rs[j].first < qs[i].first) {
      ++j;
    } else {
      dot += qs[i].second * rs[j].second;
      ++i;
      ++j;
    }
  }
  return dot / (q.l2_norm() * r.l2_norm());
}

/// Kendall's tau over all context pairs (y_i, y_j) of a universe of
/// num_contexts ids: (concordances - discordances) / C(N, 2), where a pair
/// is a tie when either q(y_i) - q(y_j) or r(y_i) - r(y_j) is zero.
///
/// Only the union Y' of the two supports is examined pairwise.  A pair
/// straddling Y' and its complement is a concordance when the inside id
/// carries both q and r mass, and a tie otherwise; pairs entirely outside
/// Y' are ties.
inline double kendall_tau(const SparseDistribution& q, const SparseDistribution& r,
                          std::size_t num_contexts) {
  if (num_contexts < 2) throw DataError("kendall tau needs at least two contexts");

  std::vector<std::pair<double, double>> joint;  // (q(y), r(y)) for y in Y'
  std::size_t both = 0;
  const auto& qs = q.support();
  const auto& rs = r.support();
  std::size_t i = 0, j = 0;
  while (i < qs.size() || j < rs.size()) {
    if (j == rs.size() || (i < qs.size() && qs[i].first < rs[j].first)) {
      joint.emplace_back(qs[i].second, 0.0);
      ++i;
    } else if (i == qs.size() || rs[j].first < qs[i].first) {
      joint.emplace_back(0.0, rs[j].second);
      ++j;
    } else {
      joint.emplace_back(qs[i].second, rs[j].second);
      ++both;
      ++i;
      ++j;
    }
  }
  if (joint.size() > num_contexts)
    throw DataError("support exceeds the declared number of contexts");

  long long concordant = 0, discordant = 0;
  for (std::size_t a = 0; a < joint.size(); ++a) {
    for (std::size_t b = a + 1; b < joint.size(); ++b) {
      double dq = joint[a].first - joint[b].first;
      double dr = joint[a].second - joint[b].second;
      if (dq == 0.0 || dr == 0.0) continue;
      if ((dq > 0.0) == (dr > 0.0))
        ++concordant;
      else
        ++discordant;
    }
  }
  double outside = static_cast<double>(num_contexts - joint.size());
  double straddle_concordances = static_cast<double>(both) * outside;

  double n = static_cast<double>(num_contexts);
  double all_pairs = n * (n - 1.0) / 2.0;
  return (static_cast<double>(concordant) + straddle_concordances -
          static_cast<double>(discordant)) /
         all_pairs;
}

}  // namespace distsim
