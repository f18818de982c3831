#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "catembed/gbt.hpp"
#include "catembed/matrix.hpp"
#include "catembed/rng.hpp"

using namespace catembed;

namespace {

Matrix make_design(std::size_t n, std::size_t m, std::vector<double>& y) {
    Rng rng(7);
    Matrix x(n, m);
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            x(i, j) = rng.uniform() * 4.0 - 2.0;
            y[i] += std::sin(x(i, j)) * static_cast<double>(j % 3 + 1);
        }
        y[i] += rng.normal() * 0.25;
    }
    return x;
}

}  // namespace

static void BM_GbtFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> y;
    const Matrix x = make_design(n, 12, y);
    gbt::GbtParams params;
    params.n_rounds = 50;
    params.max_depth = 4;
    params.learning_rate = 0.2;
    for (auto _ : state) {
        const gbt::GbtModel model = gbt::fit(x, y, params);
        benchmark::DoNotOptimize(model.trees.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_GbtFit)->Arg(128)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

static void BM_GbtPredict(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> y;
    const Matrix x = make_design(n, 12, y);
    gbt::GbtParams params;
    params.n_rounds = 100;
    params.max_depth = 4;
    const gbt::GbtModel model = gbt::fit(x, y, params);
    for (auto _ : state) {
        const std::vector<double> preds = model.predict(x);
        benchmark::DoNotOptimize(preds.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_GbtPredict)->Arg(512)->Arg(4096)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
