#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "catembed/gbt.hpp"
#include "catembed/matrix.hpp"
#include "catembed/rng.hpp"
#include "catembed/shap.hpp"

using namespace catembed;

static void BM_TreeShap(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::size_t m = 16;
    Rng rng(11);
    Matrix x(n, m);
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            x(i, j) = rng.uniform() * 4.0 - 2.0;
            y[i] += std::cos(x(i, j)) * static_cast<double>(j % 4);
        }

    gbt::GbtParams params;
    params.n_rounds = 80;
    params.max_depth = 5;
    params.learning_rate = 0.15;
    const gbt::GbtModel model = gbt::fit(x, y, params);

    for (auto _ : state) {
        const shap::ShapMatrix attributions = shap::tree_shap(model, x);
        benchmark::DoNotOptimize(attributions.base_value);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TreeShap)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
