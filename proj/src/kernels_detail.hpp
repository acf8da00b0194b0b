#pragma once

// Per-element bodies shared by the serial and OpenMP kernels.

#include <cmath>
#include <limits>
#include <vector>

#include "augimodels/kernels.hpp"

namespace aug::kernels::detail {

inline void gather_row(const CsrIndex& rows, const RowMatrix& table, RowMatrix& out,
                       std::size_t r) {
  auto dst = out.row(static_cast<Eigen::Index>(r));
  dst.setZero();
  for (auto id : rows.row(r)) dst += table.row(id);
}

struct NodeTotals {
  double n = 0;
  std::vector<double> class_counts;
  double shift = 0;  // node mean (regression)
  double sum = 0;
  double sum_sq = 0;
  double mass = 0;
};

inline NodeTotals node_totals(const SplitTargets& t) {
  NodeTotals tot;
  const bool classification = !t.labels.empty();
  if (classification) {
    tot.class_counts.assign(t.num_classes, 0.0);
    for (std::size_t i = 0; i < t.weight.size(); ++i) {
      if (!t.weight[i]) continue;
      tot.n += t.weight[i];
      tot.class_counts[static_cast<std::size_t>(t.labels[i])] += t.weight[i];
    }
    tot.mass = gini_mass(tot.class_counts);
  } else {
    double raw = 0;
    for (std::size_t i = 0; i < t.weight.size(); ++i) {
      if (!t.weight[i]) continue;
      tot.n += t.weight[i];
      raw += t.weight[i] * t.responses[i];
    }
    tot.shift = tot.n > 0 ? raw / tot.n : 0.0;
    for (std::size_t i = 0; i < t.weight.size(); ++i) {
      if (!t.weight[i]) continue;
      const double d = t.responses[i] - tot.shift;
      tot.sum += t.weight[i] * d;
      tot.sum_sq += t.weight[i] * d * d;
    }
    tot.mass = sse_mass(tot.n, tot.sum, tot.sum_sq);
  }
  return tot;
}

inline double scan_one(const CsrIndex& postings, const SplitTargets& t, const NodeTotals& tot,
                       std::size_t v, std::vector<double>& scratch) {
  constexpr double kDegenerate = -std::numeric_limits<double>::infinity();
  double n_in = 0;
  if (!t.labels.empty()) {
    scratch.assign(t.num_classes, 0.0);
    for (auto doc : postings.row(v)) {
      const auto w = t.weight[doc];
      if (!w) continue;
      n_in += w;
      scratch[static_cast<std::size_t>(t.labels[doc])] += w;
    }
    if (n_in == 0 || n_in == tot.n) return kDegenerate;
    const double inside = gini_mass(scratch);
    for (std::size_t c = 0; c < scratch.size(); ++c) scratch[c] = tot.class_counts[c] - scratch[c];
    const double outside = gini_mass(scratch);
    return tot.mass - inside - outside;
  }
  double s = 0, s2 = 0;
  for (auto doc : postings.row(v)) {
    const auto w = t.weight[doc];
    if (!w) continue;
    n_in += w;
    const double d = t.responses[doc] - tot.shift;
    s += w * d;
    s2 += w * d * d;
  }
  if (n_in == 0 || n_in == tot.n) return kDegenerate;
  const double inside = sse_mass(n_in, s, s2);
  const double outside = sse_mass(tot.n - n_in, tot.sum - s, tot.sum_sq - s2);
  return tot.mass - inside - outside;
}

inline double squared_distance(const RowMatrix& table, std::span<const double> q, std::size_t r) {
  double acc = 0;
  const auto row = table.row(static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double d = row[j] - q[static_cast<std::size_t>(j)];
    acc += d * d;
  }
  return acc;
}

}  // namespace aug::kernels::detail
