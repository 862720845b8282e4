// Serial reference vs OpenMP kernels on synthetic data.

#include <benchmark/benchmark.h>

#include <random>

#include "goatrag/kernels.hpp"

using namespace goatrag::kernels;

namespace {

LexicalIndex synthetic_index(std::size_t chunks, std::size_t terms) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint32_t> term(0, static_cast<std::uint32_t>(terms - 1));
  std::uniform_int_distribution<std::size_t> len(20, 200);
  std::vector<std::vector<std::uint32_t>> docs(chunks);
  for (auto& d : docs) {
    d.resize(len(rng));
    for (auto& t : d) t = term(rng);
  }
  return build_lexical(docs, terms);
}

std::vector<double> dense(std::size_t n) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::Parallel : Exec::Serial; }

void BM_Bm25(benchmark::State& state) {
  const auto ix = synthetic_index(static_cast<std::size_t>(state.range(0)), 5000);
  const std::vector<std::uint32_t> q = {3, 17, 256, 1024, 4000, 17};
  for (auto _ : state) benchmark::DoNotOptimize(bm25_scores(ix, q, {}, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Matvec(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0)), dim = 1024;
  const auto rows = dense(n * dim);
  const auto q = dense(dim);
  for (auto _ : state) benchmark::DoNotOptimize(matvec(rows, dim, q, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Gram(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0)), dim = 256;
  const auto a = dense(m * dim);
  const auto b = dense(m * dim);
  for (auto _ : state) benchmark::DoNotOptimize(gram(a, b, dim, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

}  // namespace

BENCHMARK(BM_Bm25)->ArgsProduct({{1000, 20000, 100000}, {0, 1}})->ArgNames({"chunks", "par"})->UseRealTime();
BENCHMARK(BM_Matvec)->ArgsProduct({{1000, 20000}, {0, 1}})->ArgNames({"rows", "par"})->UseRealTime();
BENCHMARK(BM_Gram)->ArgsProduct({{64, 512}, {0, 1}})->ArgNames({"m", "par"})->UseRealTime();

BENCHMARK_MAIN();
