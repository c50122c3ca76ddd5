// Serial reference vs OpenMP kernels on shapes typical for a rehearsal step
// (batch 256) and for class statistics over a buffer-sized sample.

#include <benchmark/benchmark.h>

#include <random>

#include "lsinit/kernels.hpp"

namespace {

lsinit::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    lsinit::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

std::vector<int> random_labels(std::size_t n, int classes) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> pick(0, classes - 1);
    std::vector<int> out(n);
    for (int& y : out) y = pick(rng);
    return out;
}

template <lsinit::Matrix (*Kernel)(const lsinit::Matrix&)>
void BM_SecondMoment(benchmark::State& state) {
    const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(x));
}

template <lsinit::Matrix (*Kernel)(const lsinit::Matrix&, const lsinit::Matrix&)>
void BM_Logits(benchmark::State& state) {
    const auto z = random_matrix(static_cast<std::size_t>(state.range(0)), 65, 2);
    const auto w = random_matrix(static_cast<std::size_t>(state.range(1)), 65, 3);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(w, z));
}

template <lsinit::Matrix (*Kernel)(const lsinit::Matrix&, const lsinit::Matrix&)>
void BM_WeightGradient(benchmark::State& state) {
    const auto z = random_matrix(static_cast<std::size_t>(state.range(0)), 65, 4);
    const auto g = random_matrix(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 5);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(g, z));
}

template <lsinit::kernels::BatchLoss (*Kernel)(const lsinit::LossKind&, const lsinit::Matrix&, std::span<const int>)>
void BM_BatchLoss(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto c = static_cast<std::size_t>(state.range(1));
    const auto logits = random_matrix(n, c, 6);
    const auto labels = random_labels(n, static_cast<int>(c));
    const lsinit::LossKind kind{};
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(kind, logits, labels));
}

namespace serial = lsinit::kernels::serial;
namespace parallel = lsinit::kernels::parallel;

} // namespace

BENCHMARK(BM_SecondMoment<serial::second_moment>)->Args({2000, 65})->Args({4000, 257});
BENCHMARK(BM_SecondMoment<parallel::second_moment>)->Args({2000, 65})->Args({4000, 257});
BENCHMARK(BM_Logits<serial::logits>)->Args({256, 60})->Args({6000, 60});
BENCHMARK(BM_Logits<parallel::logits>)->Args({256, 60})->Args({6000, 60});
BENCHMARK(BM_WeightGradient<serial::weight_gradient>)->Args({256, 60});
BENCHMARK(BM_WeightGradient<parallel::weight_gradient>)->Args({256, 60});
BENCHMARK(BM_BatchLoss<serial::batch_loss>)->Args({256, 60});
BENCHMARK(BM_BatchLoss<parallel::batch_loss>)->Args({256, 60});

BENCHMARK_MAIN();
