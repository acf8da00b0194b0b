#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp` with the same
// per-element arithmetic, so the two agree bit-for-bit. Library code calls
// the OpenMP versions; tests and bench/ compare them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace aug {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace kernels {

/// Compressed rows of ids: row r is ids[offsets[r], offsets[r+1]).
struct CsrIndex {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> ids;

  std::size_t rows() const noexcept { return offsets.size() - 1; }
  std::span<const std::uint32_t> row(std::size_t r) const {
    return {ids.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  void push_row(std::span<const std::uint32_t> row_ids) {
    ids.insert(ids.end(), row_ids.begin(), row_ids.end());
    offsets.push_back(ids.size());
  }
};

/// Targets of the samples a split scan evaluates.
struct SplitTargets {
  /// Multiplicity of each document in the node (0 = not in node).
  std::span<const std::uint32_t> weight;
  /// Class index per document (classification) ...
  std::span<const int> labels;
  std::size_t num_classes = 0;
  /// ... or response per document (regression), when labels is empty.
  std::span<const double> responses;
};

namespace serial {

/// out.row(r) = sum over ids in row r of table.row(id), in listed order.
void gather_sum(const CsrIndex& rows, const RowMatrix& table, RowMatrix& out);

/// For each posting row v (documents containing ngram v, each listed once),
/// the impurity decrease of splitting the node on v; -inf when one side is
/// empty.
std::vector<double> split_scan(const CsrIndex& postings, const SplitTargets& targets);

/// Squared Euclidean distance of every table row to `query`.
std::vector<double> squared_distances(const RowMatrix& table, std::span<const double> query);

}  // namespace serial

namespace omp {

void gather_sum(const CsrIndex& rows, const RowMatrix& table, RowMatrix& out);
std::vector<double> split_scan(const CsrIndex& postings, const SplitTargets& targets);
std::vector<double> squared_distances(const RowMatrix& table, std::span<const double> query);

}  // namespace omp

/// Per-sample summed impurity (node impurity times node size) from weighted
/// class counts: n - sum(c^2)/n.
double gini_mass(std::span<const double> class_counts);

/// Per-sample summed squared deviation from shifted first/second moments.
double sse_mass(double n, double sum, double sum_sq);

}  // namespace kernels
}  // namespace aug
