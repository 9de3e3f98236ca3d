// Serial reference kernels against their OpenMP counterparts.
// Run: ./build/bench/vpr_bench --benchmark_counters_tabular=true

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "vpr/descriptors.hpp"
#include "vpr/kernels.hpp"

namespace {

vpr::DescriptorSet random_set(std::size_t rows, std::size_t dim, std::uint64_t seed, const std::string& prefix) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  vpr::DescriptorSet set(dim);
  set.reserve(rows);
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& x : v) x = g(rng);
    set.add(prefix + std::to_string(i), v);
  }
  set.normalize();
  return set;
}

template <vpr::Exec E>
void score_rows(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 512;
  const auto db = random_set(rows, dim, 1, "d");
  const auto q = random_set(1, dim, 2, "q");
  std::vector<double> scores(rows);
  for (auto _ : state) {
    if constexpr (E == vpr::Exec::parallel) {
      vpr::kernels::score_rows_parallel(q.row(0), db.values(), dim, vpr::Metric::cosine, scores);
    } else {
      vpr::kernels::score_rows_serial(q.row(0), db.values(), dim, vpr::Metric::cosine, scores);
    }
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}

template <vpr::Exec E>
void retrieve_batch(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 256;
  const auto db = random_set(rows, dim, 3, "d");
  const auto queries = random_set(32, dim, 4, "q");
  for (auto _ : state) {
    auto lists = vpr::retrieve_batch(queries, db, 20, vpr::Metric::cosine, E);
    benchmark::DoNotOptimize(lists.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows * queries.size()));
}

}  // namespace

BENCHMARK(score_rows<vpr::Exec::serial>)->Name("score_rows/serial")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(score_rows<vpr::Exec::parallel>)->Name("score_rows/parallel")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(retrieve_batch<vpr::Exec::serial>)->Name("retrieve_batch/serial")->Arg(1 << 12)->Arg(1 << 14);
BENCHMARK(retrieve_batch<vpr::Exec::parallel>)->Name("retrieve_batch/parallel")->Arg(1 << 12)->Arg(1 << 14);

BENCHMARK_MAIN();
