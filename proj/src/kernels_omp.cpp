#include <omp.h>

#include "kernels_detail.hpp"

namespace aug::kernels::omp {

void gather_sum(const CsrIndex& rows, const RowMatrix& table, RowMatrix& out) {
  out.resize(static_cast<Eigen::Index>(rows.rows()), table.cols());
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t r = 0; r < n; ++r)
    detail::gather_row(rows, table, out, static_cast<std::size_t>(r));
}

std::vector<double> split_scan(const CsrIndex& postings, const SplitTargets& targets) {
  const auto totals = detail::node_totals(targets);
  std::vector<double> out(postings.rows());
  const auto n = static_cast<std::ptrdiff_t>(postings.rows());
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 256)
    for (std::ptrdiff_t v = 0; v < n; ++v)
      out[static_cast<std::size_t>(v)] =
          detail::scan_one(postings, targets, totals, static_cast<std::size_t>(v), scratch);
  }
  return out;
}

std::vector<double> squared_distances(const RowMatrix& table, std::span<const double> query) {
  std::vector<double> out(static_cast<std::size_t>(table.rows()));
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r)
    out[static_cast<std::size_t>(r)] =
        detail::squared_distance(table, query, static_cast<std::size_t>(r));
  return out;
}

}  // namespace aug::kernels::omp
