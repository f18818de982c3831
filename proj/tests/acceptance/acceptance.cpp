// Acceptance gates for the library: each criterion prints exactly one
// PASS/FAIL/SKIP line and the process exits with the number of failures.
// Run a single gate with --only N (used by the ctest registration).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "catembed/cli.hpp"
#include "catembed/embed.hpp"
#include "catembed/eval.hpp"
#include "catembed/gbt.hpp"
#include "catembed/matrix.hpp"
#include "catembed/pipeline.hpp"
#include "catembed/reduce.hpp"
#include "catembed/rng.hpp"
#include "catembed/shap.hpp"
#include "catembed/similarity.hpp"
#include "catembed/synth.hpp"
#include "catembed/tabular.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace catembed;

namespace {

struct Outcome {
    enum class Kind { Pass, Fail, Skip } kind = Kind::Fail;
    std::string detail;
};

Outcome pass(std::string detail) { return {Outcome::Kind::Pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::Kind::Fail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Outcome::Kind::Skip, std::move(detail)}; }

std::string fmt(const char* pattern, ...) {
    va_list args;
    va_start(args, pattern);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

// Exact binomial tail P(X >= w) for X ~ Binomial(n, 1/2), the sign test.
double sign_test_p(int n, int w) {
    if (w <= 0) return 1.0;
    double total = 0.0;
    for (int k = w; k <= n; ++k)
        total += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                          std::lgamma(n - k + 1.0) - n * std::log(2.0));
    return std::min(total, 1.0);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// 1. Single-split boosting on the four-point configuration with closed-form
//    threshold, leaf weights and gain.

Outcome criterion1() {
    const auto start = std::chrono::steady_clock::now();
    Matrix x = Matrix::from_rows({{1.0}, {2.0}, {3.0}, {4.0}});
    const std::vector<double> y{0.0, 0.0, 10.0, 10.0};
    gbt::GbtParams params;
    params.n_rounds = 1;
    params.max_depth = 1;
    params.learning_rate = 1.0;
    params.lambda = 1.0;
    params.gamma = 0.0;
    const gbt::GbtModel model = gbt::fit(x, y, params);

    if (model.trees.size() != 1 || model.trees[0].size() != 3)
        return fail("expected one depth-1 tree with a root and two leaves");
    const auto& tree = model.trees[0];
    const auto& root = tree[0];
    if (root.is_leaf || root.feature != 0) return fail("root did not split on the only feature");

    const double tol = 1e-10;
    if (std::abs(root.threshold - 2.5) > tol)
        return fail(fmt("threshold %.17g != 2.5", root.threshold));
    const double wl = tree[static_cast<std::size_t>(root.left)].weight;
    const double wr = tree[static_cast<std::size_t>(root.right)].weight;
    if (std::abs(wl + 10.0 / 3.0) > tol || std::abs(wr - 10.0 / 3.0) > tol)
        return fail(fmt("leaf weights (%.17g, %.17g) != -/+10/3", wl, wr));
    if (std::abs(root.gain - 100.0 / 3.0) > tol)
        return fail(fmt("gain %.17g != 100/3", root.gain));

    const double secs = seconds_since(start);
    if (secs >= 1.0) return fail(fmt("hand case took %.2fs, budget 1s", secs));
    return pass("threshold 2.5, leaf weights -/+10/3 and gain 100/3 all within 1e-10");
}

// ---------------------------------------------------------------------------
// 2. Path-dependent attributions against the exhaustive cover-weighted
//    Shapley oracle, plus local accuracy on every sample.

Outcome criterion2() {
    const auto start = std::chrono::steady_clock::now();
    constexpr int kModels = 60;
    double worst_gap = 0.0;
    double worst_local = 0.0;
    int trees_checked = 0;

    for (int t = 0; t < kModels; ++t) {
        Rng rng(1000 + static_cast<std::uint64_t>(t));
        const std::size_t m = 2 + static_cast<std::size_t>(t % 7);     // 2..8 features
        const std::size_t n = 8 + static_cast<std::size_t>((t * 7) % 57);  // 8..64 samples
        Matrix x(n, m);
        std::vector<double> y(n, 0.0);
        const bool with_missing = t % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                x(i, j) = rng.uniform() * 6.0 - 3.0;
                if (with_missing && rng.uniform() < 0.08)
                    x(i, j) = std::numeric_limits<double>::quiet_NaN();
                else
                    y[i] += std::sin(x(i, j)) * static_cast<double>(j + 1);
            }
            y[i] += rng.normal() * 0.3;
        }

        gbt::GbtParams params;
        params.n_rounds = 1 + t % 2;
        params.max_depth = 1 + t % 3;
        params.learning_rate = 0.4;
        params.seed = 77 + static_cast<std::uint64_t>(t);
        const gbt::GbtModel model = gbt::fit(x, y, params);
        trees_checked += static_cast<int>(model.trees.size());

        const shap::ShapMatrix got = shap::tree_shap(model, x);
        const oracles::BruteShap want = oracles::brute_shap(model, x);
        worst_gap = std::max(worst_gap, std::abs(got.base_value - want.base_value));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                worst_gap = std::max(worst_gap, std::abs(got.values(i, j) - want.values(i, j)));

        const std::vector<double> preds = model.predict(x);
        for (std::size_t i = 0; i < n; ++i) {
            double total = got.base_value;
            for (std::size_t j = 0; j < m; ++j) total += got.values(i, j);
            const double rel =
                std::abs(total - preds[i]) / std::max(1.0, std::abs(preds[i]));
            worst_local = std::max(worst_local, rel);
        }
    }

    const double secs = seconds_since(start);
    if (trees_checked < 50) return fail(fmt("only %d trees exercised", trees_checked));
    if (worst_gap > 1e-9)
        return fail(fmt("worst oracle gap %.3e over %d trees", worst_gap, trees_checked));
    if (worst_local > 1e-6)
        return fail(fmt("worst local-accuracy violation %.3e relative", worst_local));
    if (secs >= 30.0) return fail(fmt("took %.1fs, budget 30s", secs));
    return pass(fmt("%d trees: worst oracle gap %.2e, worst local-accuracy residual %.2e",
                    trees_checked, worst_gap, worst_local));
}

// ---------------------------------------------------------------------------
// 3. Principal components against an independent Jacobi eigensolver, and
//    monotone reconstruction error in the kept dimension.

Outcome criterion3() {
    const auto start = std::chrono::steady_clock::now();
    double worst_component = 0.0;
    double worst_variance = 0.0;

    for (int rep = 0; rep < 20; ++rep) {
        Rng rng(300 + static_cast<std::uint64_t>(rep));
        const std::size_t n = 12 + static_cast<std::size_t>(rep);
        const std::size_t d = 3 + static_cast<std::size_t>(rep % 4);
        Matrix x(n, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j)
                x(i, j) = rng.normal() * static_cast<double>(j + 1) + 0.5 * static_cast<double>(j);

        const reduce::PcaModel model = reduce::pca_fit(x, d);
        const oracles::EigenResult eig = oracles::jacobi_eigen(oracles::scatter_matrix(x));

        for (std::size_t c = 0; c < d; ++c) {
            double same = 0.0, flipped = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                same = std::max(same, std::abs(model.components(c, j) - eig.vectors[c][j]));
                flipped = std::max(flipped, std::abs(model.components(c, j) + eig.vectors[c][j]));
            }
            worst_component = std::max(worst_component, std::min(same, flipped));

            const double want_var = eig.values[c] / static_cast<double>(n - 1);
            worst_variance = std::max(
                worst_variance, std::abs(model.explained_variance[c] - want_var) /
                                    std::max(1.0, want_var));
        }

        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k <= d; ++k) {
            const double err = reduce::reconstruction_error(reduce::pca_fit(x, k), x);
            if (err > previous + 1e-12)
                return fail(fmt("reconstruction error rose from %.3e to %.3e at k=%zu (rep %d)",
                                previous, err, k, rep));
            previous = err;
        }
    }

    const double secs = seconds_since(start);
    if (worst_component > 1e-6)
        return fail(fmt("worst component deviation %.3e from the eigensolver", worst_component));
    if (worst_variance > 1e-6)
        return fail(fmt("worst explained-variance deviation %.3e relative", worst_variance));
    if (secs >= 5.0) return fail(fmt("took %.1fs, budget 5s", secs));
    return pass(fmt("20 matrices: worst component gap %.2e, variances within %.2e relative, "
                    "reconstruction error monotone in k",
                    worst_component, worst_variance));
}

// ---------------------------------------------------------------------------
// 4. Similarity matrix contracts and cosine scale invariance.

Outcome criterion4() {
    double worst_sym = 0.0, worst_diag = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        Rng rng(4000 + static_cast<std::uint64_t>(rep));
        const std::size_t rows = 3 + static_cast<std::size_t>(rep % 10);
        const std::size_t dim = 2 + static_cast<std::size_t>(rep % 7);
        Matrix v(rows, dim);
        std::vector<std::string> labels(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            labels[i] = "item" + std::to_string(rep) + "_" + std::to_string(i);
            double norm = 0.0;
            do {
                norm = 0.0;
                for (std::size_t j = 0; j < dim; ++j) {
                    v(i, j) = rng.uniform() * 4.0 - 2.0;
                    norm += v(i, j) * v(i, j);
                }
            } while (norm < 1e-6);
        }
        const sim::SimilarityMatrix m = sim::similarity_matrix(labels, v);
        for (std::size_t i = 0; i < rows; ++i) {
            worst_diag = std::max(worst_diag, std::abs(m.at(i, i) - 1.0));
            for (std::size_t j = 0; j < rows; ++j)
                worst_sym = std::max(worst_sym, std::abs(m.at(i, j) - m.at(j, i)));
        }
    }
    if (worst_sym > 1e-9) return fail(fmt("worst symmetry gap %.3e", worst_sym));
    if (worst_diag > 1e-9) return fail(fmt("worst unit-diagonal gap %.3e", worst_diag));

    Rng rng(4999);
    double worst_scale = 0.0;
    for (int p = 0; p < 1000; ++p) {
        const std::size_t dim = 2 + static_cast<std::size_t>(p % 6);
        std::vector<double> a(dim), b(dim), sa(dim), sb(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            a[j] = rng.normal();
            b[j] = rng.normal();
        }
        const double alpha = std::exp(rng.uniform() * 4.0 - 2.0);
        const double beta = std::exp(rng.uniform() * 4.0 - 2.0);
        for (std::size_t j = 0; j < dim; ++j) {
            sa[j] = alpha * a[j];
            sb[j] = beta * b[j];
        }
        worst_scale =
            std::max(worst_scale, std::abs(sim::cosine(a, b) - sim::cosine(sa, sb)));
    }
    if (worst_scale > 1e-12)
        return fail(fmt("worst scale-invariance gap %.3e over 1000 pairs", worst_scale));
    return pass(fmt("20 matrices symmetric with unit diagonal (worst %.2e); cosine "
                    "scale-invariant within %.2e over 1000 pairs",
                    std::max(worst_sym, worst_diag), worst_scale));
}

// ---------------------------------------------------------------------------
// 5. Planted two-cluster corpus separates under the embedding across seeds,
//    and the reference configuration trains on the stock catalog in budget.

Outcome criterion5() {
    const std::vector<std::string> cluster_a = {
        "red orange warm ember one", "red orange warm ember two",
        "red orange warm ember three", "red orange warm ember four",
        "red orange warm ember five"};
    const std::vector<std::string> cluster_b = {
        "blue green cold frost six", "blue green cold frost seven",
        "blue green cold frost eight", "blue green cold frost nine",
        "blue green cold frost ten"};

    embed::Corpus corpus;
    for (const auto& text : cluster_a) corpus.documents.push_back({text, embed::preprocess(text)});
    for (const auto& text : cluster_b) corpus.documents.push_back({text, embed::preprocess(text)});
    corpus.validate();
    const std::size_t na = cluster_a.size();
    const std::size_t total = corpus.documents.size();

    int wins = 0;
    for (int seed = 1; seed <= 100; ++seed) {
        embed::Doc2VecParams params;
        params.vector_size = 3;
        params.min_count = 1;
        params.epochs = 600;
        params.seed = static_cast<std::uint64_t>(seed);
        const embed::Doc2VecModel model = embed::train_doc2vec(corpus, params);

        double within = 0.0, across = 0.0;
        int n_within = 0, n_across = 0;
        for (std::size_t i = 0; i < total; ++i) {
            for (std::size_t j = i + 1; j < total; ++j) {
                const double c =
                    sim::cosine(model.doc_vectors.row(i), model.doc_vectors.row(j));
                const bool same = (i < na) == (j < na);
                if (same) {
                    within += c;
                    ++n_within;
                } else {
                    across += c;
                    ++n_across;
                }
            }
        }
        if (within / n_within > across / n_across) ++wins;
    }
    const double p = sign_test_p(100, wins);
    if (wins < 95 || p >= 0.01)
        return fail(fmt("within-cluster cosine won in %d/100 seeds (sign test p=%.3g)", wins, p));

    embed::Corpus catalog_corpus;
    for (const auto& entry : synth::default_catalog())
        catalog_corpus.documents.push_back({entry.description, embed::preprocess(entry.description)});
    catalog_corpus.validate();
    const auto start = std::chrono::steady_clock::now();
    embed::Doc2VecParams reference;  // vector_size 3, min_count 1, epochs 2000
    try {
        const embed::Doc2VecModel model = embed::train_doc2vec(catalog_corpus, reference);
        if (model.doc_vectors.rows() != 12) return fail("catalog training lost documents");
    } catch (const std::exception& e) {
        return fail(fmt("catalog training threw: %s", e.what()));
    }
    const double secs = seconds_since(start);
    if (secs >= 60.0) return fail(fmt("catalog training took %.1fs, budget 60s", secs));
    return pass(fmt("cluster separation in %d/100 seeds (sign test p=%.2g); 12-description "
                    "catalog trained in %.2fs",
                    wins, p, secs));
}

// ---------------------------------------------------------------------------
// 6. End-to-end: with the effect planted in the shape semantics, the
//    embedded encoder keeps the shape group near the top of grouped
//    attributions while the one-hot encoding dilutes it across columns.

int rank_of_group(const std::vector<shap::RankedGroup>& ranked, const std::string& group) {
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (ranked[i].group == group) return static_cast<int>(i) + 1;
    return static_cast<int>(ranked.size()) + 1;
}

int best_prefixed_rank(const std::vector<shap::RankedGroup>& ranked, const std::string& prefix) {
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (ranked[i].group.rfind(prefix, 0) == 0) return static_cast<int>(i) + 1;
    return static_cast<int>(ranked.size()) + 1;
}

Outcome criterion6() {
    const auto start = std::chrono::steady_clock::now();
    int top3 = 0;
    int baseline_worse = 0;
    constexpr int kSeeds = 100;

    for (int seed = 1; seed <= kSeeds; ++seed) {
        synth::SynthParams sp;
        sp.n_runs = 15;
        sp.disks_per_run = 6;
        sp.noise_std = 0.5;
        sp.seed = static_cast<std::uint64_t>(seed);
        const synth::SynthResult data = synth::generate(sp);

        pipeline::PipelineSpec spec;
        spec.schema = synth::default_schema();
        spec.doc2vec.vector_size = 3;
        spec.doc2vec.epochs = 300;
        spec.gbt.n_rounds = 60;
        spec.gbt.max_depth = 3;
        spec.gbt.learning_rate = 0.3;
        spec.seed = static_cast<std::uint64_t>(seed);

        const pipeline::FittedPipeline embedded = pipeline::fit_pipeline(spec, data.dataset);
        const tabular::DesignMatrix design_e = embedded.transform(data.dataset);
        const shap::ShapMatrix shap_e = shap::tree_shap(embedded.model, design_e.values);
        const auto grouped = shap::grouped_shap(shap_e, embedded.group_of(), false);
        const auto ranked_e =
            shap::rank_report(grouped, embedded.group_kinds(), static_cast<int>(grouped.size()));
        const int rank_embedded = rank_of_group(ranked_e, "shape");
        if (rank_embedded <= 3) ++top3;

        pipeline::PipelineSpec onehot_spec = spec;
        for (const char* name : {"shape", "shape_above", "shape_below"})
            onehot_spec.encoders[name].kind = pipeline::EncoderChoice::Kind::OneHot;
        const pipeline::FittedPipeline onehot = pipeline::fit_pipeline(onehot_spec, data.dataset);
        const tabular::DesignMatrix design_o = onehot.transform(data.dataset);
        const shap::ShapMatrix shap_o = shap::tree_shap(onehot.model, design_o.values);

        std::map<std::string, std::string> identity, column_kind;
        for (const auto& name : shap_o.feature_names) {
            identity[name] = name;
            column_kind[name] = "column";
        }
        const auto singles = shap::grouped_shap(shap_o, identity, false);
        const auto ranked_o =
            shap::rank_report(singles, column_kind, static_cast<int>(singles.size()));
        const int rank_onehot = best_prefixed_rank(ranked_o, "shape=");
        if (rank_onehot > rank_embedded) ++baseline_worse;
    }

    const double secs = seconds_since(start);
    if (top3 < 90)
        return fail(fmt("embedded shape group reached the SHAP top 3 in only %d/100 seeds", top3));
    if (baseline_worse < 70)
        return fail(fmt("one-hot best shape column outranked or tied the embedded group too "
                        "often: lower in only %d/100 seeds",
                        baseline_worse));
    if (secs >= 600.0) return fail(fmt("took %.0fs, budget 600s", secs));
    return pass(fmt("embedded shape group in SHAP top 3 in %d/100 seeds; one-hot best single "
                    "shape column ranked strictly lower in %d/100 (%.0fs)",
                    top3, baseline_worse, secs));
}

// ---------------------------------------------------------------------------
// 7. Learning-curve direction under added data, and per-fraction normality
//    p-values sane on Gaussian-noise targets.

const eval::Aggregate& find_aggregate(const eval::CvReport& report, double fraction,
                                      const std::string& metric) {
    for (const auto& agg : report.aggregates)
        if (agg.fraction == fraction && agg.metric == metric) return agg;
    throw std::runtime_error("aggregate row missing for fraction " + std::to_string(fraction));
}

Outcome criterion7() {
    int wins = 0;
    int ks_total = 0, ks_above = 0;
    constexpr int kSeeds = 20;

    for (int seed = 1; seed <= kSeeds; ++seed) {
        synth::SynthParams sp;
        sp.n_runs = 15;
        sp.disks_per_run = 5;
        sp.noise_std = 1.0;
        sp.seed = 500 + static_cast<std::uint64_t>(seed);
        const synth::SynthResult data = synth::generate(sp);

        pipeline::PipelineSpec spec;
        spec.schema = synth::default_schema();
        for (const char* name : {"shape", "shape_above", "shape_below"})
            spec.encoders[name].kind = pipeline::EncoderChoice::Kind::OneHot;
        spec.gbt.n_rounds = 60;
        spec.gbt.max_depth = 3;
        spec.gbt.learning_rate = 0.3;
        spec.seed = static_cast<std::uint64_t>(seed);

        const eval::CvReport report = eval::learning_curve(spec, data.dataset, 5, {0.5, 1.0},
                                                           static_cast<std::uint64_t>(seed),
                                                           eval::BandMode::OneSigma);
        const double mse_half = find_aggregate(report, 0.5, "mse").mean;
        const double mse_full = find_aggregate(report, 1.0, "mse").mean;
        if (mse_full <= mse_half) ++wins;

        for (const auto& agg : report.aggregates) {
            if (!std::isfinite(agg.ks_p) || agg.ks_p < 0.0 || agg.ks_p > 1.0)
                return fail(fmt("ks p-value %.17g outside [0,1] at fraction %g metric %s",
                                agg.ks_p, agg.fraction, agg.metric.c_str()));
            ++ks_total;
            if (agg.ks_p > 0.05) ++ks_above;
        }
    }

    const double p = sign_test_p(kSeeds, wins);
    if (p >= 0.05)
        return fail(fmt("full-data MSE beat half-data MSE in only %d/%d seeds (sign test p=%.3g)",
                        wins, kSeeds, p));
    const double ks_share = static_cast<double>(ks_above) / ks_total;
    if (ks_share < 0.8)
        return fail(fmt("only %d of %d ks p-values exceeded 0.05", ks_above, ks_total));
    return pass(fmt("full-data MSE <= half-data MSE in %d/%d seeds (sign test p=%.2g); %d/%d "
                    "ks p-values in [0,1] and above 0.05",
                    wins, kSeeds, p, ks_above, ks_total));
}

// ---------------------------------------------------------------------------
// 8. Corrupting held-out targets after the split never changes the fitted
//    model for that fold.

Outcome criterion8() {
    for (int i = 0; i < 10; ++i) {
        synth::SynthParams sp;
        sp.n_runs = 10 + static_cast<std::size_t>(i % 3);
        sp.disks_per_run = 4;
        sp.noise_std = 0.75;
        sp.seed = 800 + static_cast<std::uint64_t>(i);
        const synth::SynthResult data = synth::generate(sp);

        pipeline::PipelineSpec spec;
        spec.schema = synth::default_schema();
        const bool binary_variant = i % 2 == 1;
        for (const char* name : {"shape", "shape_above", "shape_below"})
            spec.encoders[name].kind = binary_variant ? pipeline::EncoderChoice::Kind::Binary
                                                      : pipeline::EncoderChoice::Kind::OneHot;
        spec.gbt.n_rounds = 12 + i;
        spec.gbt.max_depth = 2 + i % 2;
        spec.gbt.learning_rate = 0.3;
        spec.seed = 900 + static_cast<std::uint64_t>(i);

        const eval::FoldPlan plan =
            eval::kfold_split(data.dataset.row_count, 4, 700 + static_cast<std::uint64_t>(i));
        const int fold = i % 4;

        const std::vector<eval::CvFold> clean = eval::cross_validate(spec, data.dataset, plan);

        tabular::Dataset corrupted = data.dataset;
        for (int row : plan.test_rows(fold))
            corrupted.column("coating_thickness").numeric[static_cast<std::size_t>(row)] =
                4321.0 + i;
        const std::vector<eval::CvFold> dirty = eval::cross_validate(spec, corrupted, plan);

        if (clean[static_cast<std::size_t>(fold)].model_json !=
            dirty[static_cast<std::size_t>(fold)].model_json)
            return fail(fmt("pipeline %d: corrupted fold %d changed the fitted model", i, fold));
        if (clean[static_cast<std::size_t>(fold)].mse ==
            dirty[static_cast<std::size_t>(fold)].mse)
            return fail(fmt("pipeline %d: corruption never reached the held-out score", i));
        const int other = (fold + 1) % 4;
        if (clean[static_cast<std::size_t>(other)].model_json ==
            dirty[static_cast<std::size_t>(other)].model_json)
            return fail(fmt("pipeline %d: corruption never reached fold %d's training data", i,
                            other));
    }
    return pass("10 pipelines: held-out corruption left every corrupted fold's model "
                "bit-identical while neighboring folds shifted");
}

// ---------------------------------------------------------------------------
// 9. The full pipeline command is byte-deterministic across executions.

int run_cli_args(const std::vector<std::string>& args) {
    std::vector<std::string> storage;
    storage.emplace_back("catembed");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(storage.size());
    for (const auto& s : storage) argv.push_back(s.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

Outcome criterion9() {
    testutil::TempDir td;
    const auto data_dir = td.file("data");
    if (run_cli_args({"synth", "--runs", "8", "--disks", "3", "--noise", "0.5", "--seed", "21",
                      "--out", data_dir.string()}) != 0)
        return fail("synth step failed");

    const auto cfg_path = td.file("pipeline.json");
    testutil::spit(cfg_path,
                   std::string("{\n") +
                       "  \"dataset\": \"" + (data_dir / "dataset.csv").string() + "\",\n" +
                       "  \"schema\": \"" + (data_dir / "schema.json").string() + "\",\n" +
                       "  \"seed\": 3,\n" +
                       "  \"doc2vec\": {\"epochs\": 150},\n" +
                       "  \"gbt\": {\"n_rounds\": 10, \"max_depth\": 2},\n" +
                       "  \"eval\": {\"k\": 3, \"fractions\": [1.0], \"band\": \"sigma\"},\n" +
                       "  \"variants\": {\n" +
                       "    \"embedded\": {},\n" +
                       "    \"onehot\": {\"shape\": \"onehot\", \"shape_above\": \"onehot\", "
                       "\"shape_below\": \"onehot\"}\n" +
                       "  }\n}");

    const auto out_a = td.file("a"), out_b = td.file("b");
    if (run_cli_args({"pipeline", "--config", cfg_path.string(), "--out", out_a.string()}) != 0)
        return fail("first pipeline execution failed");
    if (run_cli_args({"pipeline", "--config", cfg_path.string(), "--out", out_b.string()}) != 0)
        return fail("second pipeline execution failed");

    std::vector<std::string> files = {"manifest.json"};
    for (const char* variant : {"embedded", "onehot"})
        for (const char* suffix : {"_folds.csv", "_aggregate.csv", "_shap.csv", "_gain.csv"})
            files.push_back(std::string(variant) + suffix);
    for (const auto& name : files)
        if (testutil::slurp(out_a / name) != testutil::slurp(out_b / name))
            return fail(fmt("artifact %s differs between executions", name.c_str()));
    return pass(fmt("two pipeline executions produced byte-identical artifacts (%zu files, "
                    "2 encoder variants)",
                    files.size()));
}

// ---------------------------------------------------------------------------
// 10. Optional external-embedding ordering check; runs only when the caller
//     supplies genuine pretrained vectors for the stock catalog.

Outcome criterion10() {
    const char* path = std::getenv("CATEMBED_PRETRAINED_TABLE");
    if (path == nullptr || *path == '\0')
        return skip("no pretrained embedding table supplied; set CATEMBED_PRETRAINED_TABLE to "
                    "an embeddings CSV covering the 12 stock catalog descriptions to enable "
                    "this check");

    const embed::EmbeddingTable table = embed::EmbeddingTable::load(path);
    const std::string rhombus55 = "rhombus shape 55 degrees";
    const std::string rhombus35 = "rhombus shape 35 degrees";
    const std::string unknown = "unknown shape";
    std::vector<std::string> rhombi;
    for (const auto& entry : synth::default_catalog())
        if (entry.description.find("rhombus") != std::string::npos)
            rhombi.push_back(entry.description);

    auto vector_for = [&](const std::string& desc) {
        const auto idx = table.index_of(desc);
        if (!idx)
            throw std::runtime_error("pretrained table lacks description '" + desc + "'");
        return table.vector_of(*idx);
    };

    try {
        const double pair_sim = sim::cosine(vector_for(rhombus55), vector_for(rhombus35));
        double worst_unknown = -2.0;
        for (const auto& desc : rhombi)
            worst_unknown = std::max(worst_unknown,
                                     sim::cosine(vector_for(unknown), vector_for(desc)));
        if (pair_sim <= worst_unknown)
            return fail(fmt("55/35-degree rhombus cosine %.4f did not exceed the best "
                            "unknown-shape/rhombus cosine %.4f",
                            pair_sim, worst_unknown));
        return pass(fmt("55/35-degree rhombus cosine %.4f exceeds every unknown-shape/rhombus "
                        "cosine (max %.4f)",
                        pair_sim, worst_unknown));
    } catch (const std::exception& e) {
        return fail(fmt("pretrained table unusable: %s", e.what()));
    }
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (arg.rfind("--only=", 0) == 0) {
            only = std::atoi(arg.c_str() + 7);
        } else {
            std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
            return 2;
        }
    }

    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> entries = {
        {1, "boosting hand case", criterion1},
        {2, "tree attributions vs exhaustive Shapley oracle", criterion2},
        {3, "principal components vs Jacobi eigensolver", criterion3},
        {4, "similarity matrix contracts", criterion4},
        {5, "embedding cluster separation", criterion5},
        {6, "embedded vs one-hot shape ranking", criterion6},
        {7, "learning-curve direction and normality p-values", criterion7},
        {8, "no leakage from held-out targets", criterion8},
        {9, "pipeline byte determinism", criterion9},
        {10, "pretrained-embedding ordering", criterion10},
    };

    int failures = 0, passes = 0, skips = 0;
    for (const auto& entry : entries) {
        if (only != 0 && entry.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = entry.fn();
        } catch (const std::exception& e) {
            outcome = fail(std::string("unexpected exception: ") + e.what());
        }
        const double secs = seconds_since(start);
        const char* label = outcome.kind == Outcome::Kind::Pass   ? "PASS"
                            : outcome.kind == Outcome::Kind::Skip ? "SKIP"
                                                                  : "FAIL";
        std::printf("%s criterion %d: %s: %s (%.2fs)\n", label, entry.id, entry.name,
                    outcome.detail.c_str(), secs);
        std::fflush(stdout);
        if (outcome.kind == Outcome::Kind::Fail) ++failures;
        if (outcome.kind == Outcome::Kind::Pass) ++passes;
        if (outcome.kind == Outcome::Kind::Skip) ++skips;
    }

    if (only == 0)
        std::printf("%d passed, %d failed, %d skipped\n", passes, failures, skips);
    return failures;
}
