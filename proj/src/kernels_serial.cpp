#include "kernels_detail.hpp"

#include <algorithm>

namespace aug::kernels {

double gini_mass(std::span<const double> class_counts) {
  double n = 0, sq = 0;
  for (double c : class_counts) {
    n += c;
    sq += c * c;
  }
  return n > 0 ? n - sq / n : 0.0;
}

double sse_mass(double n, double sum, double sum_sq) {
  if (n <= 0) return 0.0;
  return std::max(0.0, sum_sq - sum * sum / n);
}

namespace serial {

void gather_sum(const CsrIndex& rows, const RowMatrix& table, RowMatrix& out) {
  out.resize(static_cast<Eigen::Index>(rows.rows()), table.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r) detail::gather_row(rows, table, out, r);
}

std::vector<double> split_scan(const CsrIndex& postings, const SplitTargets& targets) {
  const auto totals = detail::node_totals(targets);
  std::vector<double> out(postings.rows());
  std::vector<double> scratch;
  for (std::size_t v = 0; v < postings.rows(); ++v)
    out[v] = detail::scan_one(postings, targets, totals, v, scratch);
  return out;
}

std::vector<double> squared_distances(const RowMatrix& table, std::span<const double> query) {
  std::vector<double> out(static_cast<std::size_t>(table.rows()));
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = detail::squared_distance(table, query, r);
  return out;
}

}  // namespace serial
}  // namespace aug::kernels
