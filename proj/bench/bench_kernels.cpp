// Serial reference vs OpenMP kernels, plus the end-to-end retrain cost.
#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "collie/collie_model.hpp"
#include "collie/kernels.hpp"
#include "collie/world.hpp"

namespace {

using collie::kernels::RowsView;

std::vector<double> random_rows(std::size_t n, std::size_t d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n * d);
  for (auto& x : v) x = g(rng);
  return v;
}

template <auto Fn>
void BM_gram(benchmark::State& state) {
  const std::size_t n = state.range(0), d = 512;
  const auto x = random_rows(n, d, 1);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    Fn(RowsView{x, d}, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <auto Fn>
void BM_cross(benchmark::State& state) {
  const std::size_t n = state.range(0), d = 512;
  const auto a = random_rows(30, d, 2);
  const auto b = random_rows(n, d, 3);
  std::vector<double> out(30 * n);
  for (auto _ : state) {
    Fn(RowsView{a, d}, RowsView{b, d}, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void BM_distances(benchmark::State& state) {
  const std::size_t n = state.range(0), d = 512;
  const auto x = random_rows(n, d, 4);
  const auto q = random_rows(1, d, 5);
  std::vector<double> out(n);
  for (auto _ : state) {
    Fn(q, RowsView{x, d}, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_retrain_d512(benchmark::State& state) {
  collie::WorldConfig wc;
  wc.dim = 512;
  wc.seed = 3;
  const auto ds = collie::generate_world(wc);
  const std::size_t pairs = state.range(0);
  for (auto _ : state) {
    collie::CollieModel m(ds.dim, ds.nouns);
    for (std::size_t i = 0; i < pairs; ++i) {
      const auto& r = ds.referents[i % ds.referents.size()];
      m.add_example({r.expression, r.text, r.image_id, r.image});
    }
    m.retrain();
    benchmark::DoNotOptimize(m.trained());
  }
}

}  // namespace

BENCHMARK(BM_gram<collie::kernels::serial::gram>)->Name("gram/serial")->Arg(200)->Arg(1000);
BENCHMARK(BM_gram<collie::kernels::omp::gram>)->Name("gram/omp")->Arg(200)->Arg(1000);
BENCHMARK(BM_cross<collie::kernels::serial::cross_dots>)->Name("cross_dots/serial")->Arg(1000);
BENCHMARK(BM_cross<collie::kernels::omp::cross_dots>)->Name("cross_dots/omp")->Arg(1000);
BENCHMARK(BM_distances<collie::kernels::serial::sq_distances>)->Name("sq_distances/serial")->Arg(1000);
BENCHMARK(BM_distances<collie::kernels::omp::sq_distances>)->Name("sq_distances/omp")->Arg(1000);
BENCHMARK(BM_retrain_d512)->Arg(1)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
