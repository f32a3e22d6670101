// Serial vs OpenMP kernels, flat vs IVF search, and index build cost.
// Run with OMP_NUM_THREADS to vary the thread count.

#include <benchmark/benchmark.h>

#include <cmath>
#include <map>
#include <vector>

#include "ragner/kernels.hpp"
#include "ragner/rng.hpp"
#include "ragner/vector_index.hpp"

using namespace ragner;

namespace {

constexpr std::size_t kDim = 768;

std::vector<float> random_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> rows(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      rows[i * dim + d] = static_cast<float>(rng.normal());
      norm += static_cast<double>(rows[i * dim + d]) * rows[i * dim + d];
    }
    for (std::size_t d = 0; d < dim; ++d) rows[i * dim + d] = static_cast<float>(rows[i * dim + d] / std::sqrt(norm));
  }
  return rows;
}

std::vector<WordRecord> records(std::size_t n, std::size_t dim) {
  const auto rows = random_rows(n, dim, 11);
  std::vector<WordRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].record_id = static_cast<std::uint32_t>(i);
    out[i].sentence_id = static_cast<SentenceId>(i);
    out[i].vector.assign(rows.begin() + i * dim, rows.begin() + (i + 1) * dim);
  }
  return out;
}

/// Tables are shared across benchmarks of the same size.
const RecordTable& table(std::size_t n) {
  static std::map<std::size_t, RecordTable> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, RecordTable::from_records(records(n, kDim))).first;
  return it->second;
}

const IvfIndex& ivf(std::size_t n) {
  static std::map<std::size_t, IvfIndex> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, IvfIndex::build(table(n), IvfParams{.seed = 3})).first;
  return it->second;
}

void BM_ScoreRowsSerial(benchmark::State& state) {
  const auto& t = table(static_cast<std::size_t>(state.range(0)));
  const auto query = random_rows(1, kDim, 5);
  std::vector<double> out(t.size());
  for (auto _ : state) {
    kernels::score_rows_serial(t.data(), kDim, query, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t.size()));
}

void BM_ScoreRowsParallel(benchmark::State& state) {
  const auto& t = table(static_cast<std::size_t>(state.range(0)));
  const auto query = random_rows(1, kDim, 5);
  std::vector<double> out(t.size());
  for (auto _ : state) {
    kernels::score_rows_parallel(t.data(), kDim, query, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t.size()));
  state.counters["threads"] = kernels::max_threads();
}

void BM_AssignNearestSerial(benchmark::State& state) {
  const auto points = random_rows(4096, kDim, 7);
  const auto centroids = random_rows(static_cast<std::size_t>(state.range(0)), kDim, 8);
  std::vector<std::uint32_t> labels(4096);
  for (auto _ : state) {
    kernels::assign_nearest_serial(points, centroids, kDim, labels);
    benchmark::DoNotOptimize(labels.data());
  }
}

void BM_AssignNearestParallel(benchmark::State& state) {
  const auto points = random_rows(4096, kDim, 7);
  const auto centroids = random_rows(static_cast<std::size_t>(state.range(0)), kDim, 8);
  std::vector<std::uint32_t> labels(4096);
  for (auto _ : state) {
    kernels::assign_nearest_parallel(points, centroids, kDim, labels);
    benchmark::DoNotOptimize(labels.data());
  }
  state.counters["threads"] = kernels::max_threads();
}

void BM_FlatSearch(benchmark::State& state) {
  const FlatIndex index(table(static_cast<std::size_t>(state.range(0))));
  const auto query = random_rows(1, kDim, 9);
  for (auto _ : state) benchmark::DoNotOptimize(index.search(query, 5));
}

void BM_IvfSearch(benchmark::State& state) {
  const auto& index = ivf(static_cast<std::size_t>(state.range(0)));
  const auto query = random_rows(1, kDim, 9);
  const auto nprobe = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(index.search(query, 5, nprobe));
  state.counters["nlist"] = static_cast<double>(index.nlist());
}

void BM_IvfBuild(benchmark::State& state) {
  const auto& t = table(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(IvfIndex::build(t, IvfParams{.seed = 3}));
}

}  // namespace

BENCHMARK(BM_ScoreRowsSerial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreRowsParallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignNearestSerial)->Arg(64)->Arg(316)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignNearestParallel)->Arg(64)->Arg(316)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlatSearch)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
// nprobe 0 is the default, ceil(nlist / 8)
BENCHMARK(BM_IvfSearch)->Args({10000, 0})->Args({100000, 0})->Args({100000, 1})->Args({100000, 316})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IvfBuild)->Arg(10000)->Unit(benchmark::kSecond)->Iterations(1);
BENCHMARK_MAIN();
