#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "catembed/embed.hpp"
#include "catembed/matrix.hpp"
#include "catembed/reduce.hpp"
#include "catembed/rng.hpp"

using namespace catembed;

namespace {

// Synthetic description corpus shaped like the catalog: a few shared nouns
// per document plus a unique qualifier.
embed::Corpus make_corpus(std::size_t docs) {
    static const char* stems[] = {"rhombus", "square", "triangular", "circular",
                                  "hexagonal", "rectangular"};
    static const char* extras[] = {"shape", "profile", "outline", "contour"};
    embed::Corpus corpus;
    for (std::size_t i = 0; i < docs; ++i) {
        const std::string text = std::string(stems[i % 6]) + " " + extras[i % 4] + " variant " +
                                 std::to_string(i);
        corpus.documents.push_back({text, embed::preprocess(text)});
    }
    corpus.validate();
    return corpus;
}

}  // namespace

static void BM_Doc2VecTrain(benchmark::State& state) {
    const embed::Corpus corpus = make_corpus(24);
    embed::Doc2VecParams params;
    params.vector_size = 3;
    params.epochs = static_cast<int>(state.range(0));
    for (auto _ : state) {
        const embed::Doc2VecModel model = embed::train_doc2vec(corpus, params);
        benchmark::DoNotOptimize(model.doc_vectors.rows());
    }
}
BENCHMARK(BM_Doc2VecTrain)->Arg(200)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_PcaFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 32;
    Rng rng(5);
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal() * static_cast<double>(j + 1);
    for (auto _ : state) {
        const reduce::PcaModel model = reduce::pca_fit(x, 3);
        benchmark::DoNotOptimize(model.components.rows());
    }
}
BENCHMARK(BM_PcaFit)->Arg(256)->Arg(2048)->Unit(benchmark::kMicrosecond);
