// Serial reference vs OpenMP kernels on synthetic inputs.

#include <benchmark/benchmark.h>

#include <vector>

#include "augimodels/kernels.hpp"
#include "augimodels/rng.hpp"

namespace {

using aug::RowMatrix;
using aug::kernels::CsrIndex;

RowMatrix random_table(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  aug::Rng rng(seed);
  RowMatrix t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform() * 2 - 1;
  return t;
}

// `rows` rows of `per_row` ids drawn from [0, universe).
CsrIndex random_rows(std::size_t rows, std::size_t per_row, std::size_t universe, std::uint64_t seed) {
  aug::Rng rng(seed);
  CsrIndex idx;
  std::vector<std::uint32_t> ids;
  for (std::size_t r = 0; r < rows; ++r) {
    ids.clear();
    for (std::size_t k = 0; k < per_row; ++k) ids.push_back(static_cast<std::uint32_t>(rng.below(universe)));
    idx.push_row(ids);
  }
  return idx;
}

// Posting lists: each of `vocab` ngrams occurs in a random subset of docs.
CsrIndex random_postings(std::size_t vocab, std::size_t docs, std::uint64_t seed) {
  aug::Rng rng(seed);
  CsrIndex idx;
  std::vector<std::uint32_t> ids;
  for (std::size_t v = 0; v < vocab; ++v) {
    ids.clear();
    const auto p = 1 + rng.below(20);
    for (std::size_t d = 0; d < docs; ++d)
      if (rng.below(100) < p) ids.push_back(static_cast<std::uint32_t>(d));
    idx.push_row(ids);
  }
  return idx;
}

template <bool Parallel>
void BM_gather_sum(benchmark::State& state) {
  const auto docs = static_cast<std::size_t>(state.range(0));
  const auto table = random_table(5000, 64, 1);
  const auto rows = random_rows(docs, 40, 5000, 2);
  RowMatrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      aug::kernels::omp::gather_sum(rows, table, out);
    else
      aug::kernels::serial::gather_sum(rows, table, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * docs));
}

template <bool Parallel>
void BM_split_scan(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const std::size_t docs = 2000;
  const auto postings = random_postings(vocab, docs, 3);
  aug::Rng rng(4);
  std::vector<int> labels(docs);
  for (auto& l : labels) l = static_cast<int>(rng.below(2));
  std::vector<std::uint32_t> weight(docs, 1);
  aug::kernels::SplitTargets t;
  t.weight = weight;
  t.labels = labels;
  t.num_classes = 2;
  for (auto _ : state) {
    auto d = Parallel ? aug::kernels::omp::split_scan(postings, t) : aug::kernels::serial::split_scan(postings, t);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * vocab));
}

template <bool Parallel>
void BM_squared_distances(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto table = random_table(rows, 128, 5);
  std::vector<double> q(128, 0.1);
  for (auto _ : state) {
    auto d = Parallel ? aug::kernels::omp::squared_distances(table, q)
                      : aug::kernels::serial::squared_distances(table, q);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}

}  // namespace

BENCHMARK(BM_gather_sum<false>)->Name("gather_sum/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_gather_sum<true>)->Name("gather_sum/omp")->Arg(1000)->Arg(10000);
BENCHMARK(BM_split_scan<false>)->Name("split_scan/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_split_scan<true>)->Name("split_scan/omp")->Arg(1000)->Arg(10000);
BENCHMARK(BM_squared_distances<false>)->Name("squared_distances/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_squared_distances<true>)->Name("squared_distances/omp")->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
