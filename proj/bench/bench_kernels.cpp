// Serial reference loops vs the OpenMP kernels, and the replication runner at
// one worker vs all available threads.
#include "fgmm/kernels.hpp"
#include "fgmm/simulation.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using fgmm::Matrix;
using fgmm::Vector;

Matrix random_matrix(fgmm::Index rows, fgmm::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (fgmm::Index j = 0; j < cols; ++j)
    for (fgmm::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

void BM_CrossProduct(benchmark::State& state, bool parallel) {
  const auto n = static_cast<fgmm::Index>(state.range(0));
  const auto p = static_cast<fgmm::Index>(state.range(1));
  const Matrix a = random_matrix(n, p, 1), b = random_matrix(n, p, 2);
  for (auto _ : state) {
    Matrix c = parallel ? fgmm::kernels::scaled_cross_product(a, b) : fgmm::kernels::scaled_cross_product_serial(a, b);
    benchmark::DoNotOptimize(c.data());
  }
}

void BM_ColumnMoments(benchmark::State& state, bool parallel) {
  const auto n = static_cast<fgmm::Index>(state.range(0));
  const auto p = static_cast<fgmm::Index>(state.range(1));
  const Matrix v = random_matrix(n, p, 3);
  const Vector r = random_matrix(n, 1, 4).col(0);
  for (auto _ : state) {
    Vector m = parallel ? fgmm::kernels::column_moments(v, r) : fgmm::kernels::column_moments_serial(v, r);
    benchmark::DoNotOptimize(m.data());
  }
}

void BM_LinearIndex(benchmark::State& state, bool parallel) {
  const auto n = static_cast<fgmm::Index>(state.range(0));
  const auto p = static_cast<fgmm::Index>(state.range(1));
  const Matrix x = random_matrix(n, p, 5);
  const Vector beta = random_matrix(p, 1, 6).col(0);
  for (auto _ : state) {
    Vector u = parallel ? fgmm::kernels::linear_index(x, beta) : fgmm::kernels::linear_index_serial(x, beta);
    benchmark::DoNotOptimize(u.data());
  }
}

void BM_Experiment(benchmark::State& state, bool parallel) {
  fgmm::sim::DgpSpec spec;
  spec.n = 200;
  spec.p = static_cast<fgmm::Index>(state.range(0));
  const std::vector<fgmm::sim::MethodSpec> methods{
      {fgmm::sim::MethodSpec::Kind::FGMM, fgmm::PenaltySpec::scad(0.1)}};
  const int reps = 8;
  for (auto _ : state) {
    auto reports = parallel ? fgmm::sim::run_experiment(spec, methods, reps, fgmm::kernels::max_threads())
                            : fgmm::sim::run_experiment_serial(spec, methods, reps);
    benchmark::DoNotOptimize(reports.data());
  }
  state.counters["threads"] = parallel ? fgmm::kernels::max_threads() : 1;
}

}  // namespace

BENCHMARK_CAPTURE(BM_CrossProduct, serial, false)->Args({200, 50})->Args({2000, 300});
BENCHMARK_CAPTURE(BM_CrossProduct, omp, true)->Args({200, 50})->Args({2000, 300});
BENCHMARK_CAPTURE(BM_ColumnMoments, serial, false)->Args({200, 300})->Args({20000, 300});
BENCHMARK_CAPTURE(BM_ColumnMoments, omp, true)->Args({200, 300})->Args({20000, 300});
BENCHMARK_CAPTURE(BM_LinearIndex, serial, false)->Args({200, 300})->Args({20000, 300});
BENCHMARK_CAPTURE(BM_LinearIndex, omp, true)->Args({200, 300})->Args({20000, 300});
BENCHMARK_CAPTURE(BM_Experiment, serial, false)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Experiment, omp, true)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
