// Serial vs OpenMP matmul kernels at training-relevant and larger sizes.
// Run: build/bench/ppm_kernels_bench

#include <benchmark/benchmark.h>

#include <vector>

#include "ppm/nn/kernels.hpp"
#include "ppm/nn/rng.hpp"

using namespace ppm::nn;

namespace {

std::vector<double> random_matrix(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(std::size_t(rows) * cols);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void matmul_with_backend(benchmark::State& state, kernels::Backend backend) {
    int n = static_cast<int>(state.range(0));
    auto a = random_matrix(n, n, 1);
    auto b = random_matrix(n, n, 2);
    std::vector<double> c(std::size_t(n) * n);

    kernels::Backend saved = kernels::active_backend();
    std::size_t saved_threshold = kernels::parallel_threshold();
    kernels::set_backend(backend);
    kernels::set_parallel_threshold(0);

    for (auto _ : state) {
        kernels::matmul(a.data(), b.data(), c.data(), n, n, n);
        benchmark::DoNotOptimize(c.data());
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);

    kernels::set_backend(saved);
    kernels::set_parallel_threshold(saved_threshold);
}

void bench_matmul_serial(benchmark::State& state) {
    matmul_with_backend(state, kernels::Backend::serial);
}
void bench_matmul_openmp(benchmark::State& state) {
    matmul_with_backend(state, kernels::Backend::openmp);
}

}  // namespace

BENCHMARK(bench_matmul_serial)->Arg(16)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bench_matmul_openmp)->Arg(16)->Arg(64)->Arg(256)->Arg(512);

BENCHMARK_MAIN();
