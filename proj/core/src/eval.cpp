#include "catembed/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "catembed/csv.hpp"
#include "catembed/rng.hpp"

namespace catembed::eval {

std::vector<int> FoldPlan::test_rows(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> FoldPlan::train_rows(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(static_cast<int>(i));
    return out;
}

FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
    if (static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("kfold_split: k=" + std::to_string(k) + " exceeds n=" +
                                    std::to_string(n));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "kfold"));
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.resize(n);
    // The first n % k folds take one extra sample.
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t at = 0;
    for (int fold = 0; fold < k; ++fold) {
        const std::size_t size = base + (static_cast<std::size_t>(fold) < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i)
            plan.assignments[static_cast<std::size_t>(order[at++])] = fold;
    }
    return plan;
}

double mse(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size() || y.empty())
        throw std::invalid_argument("mse: need equal non-empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - y_hat[i];
        acc += r * r;
    }
    return acc / static_cast<double>(y.size());
}

double r2(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size() || y.empty())
        throw std::invalid_argument("r2: need equal non-empty vectors");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) throw std::invalid_argument("r2: constant target has no variance to explain");
    return 1.0 - ss_res / ss_tot;
}

namespace {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Asymptotic Kolmogorov survival function Q(lambda)=2*sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
double kolmogorov_q(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * lambda * lambda * static_cast<double>(j) *
                                     static_cast<double>(j));
        sum += sign * term;
        if (term < 1e-14) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double sample_stddev(std::span<const double> values, double mean) {
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

// Regularized incomplete beta by continued fraction, for the t CDF.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 200;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * betai(nu / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double nu) {
    double lo = 0.0, hi = 1.0;
    while (student_t_cdf(hi, nu) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = (lo + hi) / 2.0;
        (student_t_cdf(mid, nu) < p ? lo : hi) = mid;
    }
    return (lo + hi) / 2.0;
}

}  // namespace

double ks_normality(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 3) throw std::invalid_argument("ks_normality: need at least 3 values");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("ks_normality: non-finite value");
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    const double stddev = sample_stddev(values, mean);
    if (stddev == 0.0) throw std::invalid_argument("ks_normality: zero-variance sample");

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = standard_normal_cdf((sorted[i] - mean) / stddev);
        const double upper = static_cast<double>(i + 1) / static_cast<double>(n) - f;
        const double lower = f - static_cast<double>(i) / static_cast<double>(n);
        d = std::max({d, upper, lower});
    }
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double lambda = d * (sqrt_n + 0.12 + 0.11 / sqrt_n);
    return kolmogorov_q(lambda);
}

Band confidence_band(std::span<const double> values, BandMode mode) {
    if (values.size() < 2) throw std::invalid_argument("confidence_band: need at least 2 values");
    Band band;
    band.mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    band.stddev = sample_stddev(values, band.mean);
    if (mode == BandMode::OneSigma) {
        band.low = band.mean - band.stddev;
        band.high = band.mean + band.stddev;
    } else {
        // Two-sided 99.9% t-interval for the mean.
        const double nu = static_cast<double>(values.size() - 1);
        const double t = student_t_quantile(0.9995, nu);
        const double half = t * band.stddev / std::sqrt(static_cast<double>(values.size()));
        band.low = band.mean - half;
        band.high = band.mean + half;
    }
    return band;
}

namespace {

CvFold evaluate_fold(const pipeline::PipelineSpec& spec, const tabular::Dataset& ds,
                     const FoldPlan& plan, int fold, const std::vector<int>& train_rows) {
    if (train_rows.size() < 2)
        throw std::invalid_argument("cross_validate: fold " + std::to_string(fold) +
                                    " leaves fewer than 2 training samples");
    const std::vector<int> test_rows = plan.test_rows(fold);
    const tabular::Dataset train = ds.select_rows(train_rows);
    const tabular::Dataset test = ds.select_rows(test_rows);

    pipeline::PipelineSpec fold_spec = spec;
    fold_spec.seed = derive_seed(plan.seed, "fold", static_cast<std::uint64_t>(fold));
    const pipeline::FittedPipeline fitted =
        pipeline::fit_pipeline(fold_spec, train, spec.global_embedding_fit ? &ds : nullptr);

    const std::vector<double> truth = fitted.targets(test);
    const std::vector<double> predicted = fitted.predict(test);

    CvFold out;
    out.fold = fold;
    out.mse = mse(truth, predicted);
    out.r2 = r2(truth, predicted);
    out.model_json = fitted.to_json();
    return out;
}

}  // namespace

std::vector<CvFold> cross_validate(const pipeline::PipelineSpec& spec,
                                   const tabular::Dataset& ds, const FoldPlan& plan) {
    if (plan.assignments.size() != ds.row_count)
        throw std::invalid_argument("cross_validate: fold plan covers " +
                                    std::to_string(plan.assignments.size()) + " rows, dataset has " +
                                    std::to_string(ds.row_count));
    std::vector<CvFold> folds;
    folds.reserve(static_cast<std::size_t>(plan.k));
    for (int fold = 0; fold < plan.k; ++fold)
        folds.push_back(evaluate_fold(spec, ds, plan, fold, plan.train_rows(fold)));
    return folds;
}

std::vector<CvFold> cross_validate(const pipeline::PipelineSpec& spec,
                                   const tabular::Dataset& ds, int k, std::uint64_t seed) {
    return cross_validate(spec, ds, kfold_split(ds.row_count, k, seed));
}

std::vector<Aggregate> aggregate_folds(const std::vector<CvFold>& folds, BandMode mode) {
    std::vector<double> fractions;
    for (const CvFold& fold : folds)
        if (std::find(fractions.begin(), fractions.end(), fold.fraction) == fractions.end())
            fractions.push_back(fold.fraction);
    std::sort(fractions.begin(), fractions.end());

    std::vector<Aggregate> out;
    for (double fraction : fractions) {
        std::vector<double> mse_values, r2_values;
        for (const CvFold& fold : folds)
            if (fold.fraction == fraction) {
                mse_values.push_back(fold.mse);
                r2_values.push_back(fold.r2);
            }
        const std::pair<std::string, const std::vector<double>*> metric_sets[] = {
            {"mse", &mse_values}, {"r2", &r2_values}};
        for (const auto& [metric, values] : metric_sets) {
            Aggregate agg;
            agg.fraction = fraction;
            agg.metric = metric;
            const Band band = confidence_band(*values, mode);
            agg.mean = band.mean;
            agg.stddev = band.stddev;
            agg.low = band.low;
            agg.high = band.high;
            agg.ks_p = values->size() >= 3 ? ks_normality(*values)
                                           : std::numeric_limits<double>::quiet_NaN();
            out.push_back(std::move(agg));
        }
    }
    return out;
}

CvReport learning_curve(const pipeline::PipelineSpec& spec, const tabular::Dataset& ds, int k,
                        const std::vector<double>& fractions, std::uint64_t seed,
                        BandMode band_mode) {
    if (fractions.empty()) throw std::invalid_argument("learning_curve: no fractions");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (!(fractions[i] > 0.0) || fractions[i] > 1.0)
            throw std::invalid_argument("learning_curve: fractions must lie in (0, 1]");
        if (i > 0 && fractions[i] <= fractions[i - 1])
            throw std::invalid_argument("learning_curve: fractions must be strictly ascending");
        if (fractions[i] * static_cast<double>(ds.row_count) < static_cast<double>(k))
            throw std::invalid_argument("learning_curve: fraction " + std::to_string(fractions[i]) +
                                        " yields fewer than k samples");
    }

    const FoldPlan plan = kfold_split(ds.row_count, k, seed);
    CvReport report;
    report.band_mode = band_mode;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        const double fraction = fractions[fi];
        for (int fold = 0; fold < k; ++fold) {
            std::vector<int> train_rows = plan.train_rows(fold);
            if (fraction < 1.0) {
                const auto m = static_cast<std::size_t>(std::llround(
                    fraction * static_cast<double>(train_rows.size())));
                if (m < 2)
                    throw std::invalid_argument("learning_curve: fraction " +
                                                std::to_string(fraction) +
                                                " leaves fewer than 2 training samples in a fold");
                Rng rng(derive_seed(seed, "fraction-subsample",
                                    static_cast<std::uint64_t>(fold) * 100003ULL + fi));
                rng.shuffle(train_rows);
                train_rows.resize(m);
                std::sort(train_rows.begin(), train_rows.end());
            }
            CvFold fold_result = evaluate_fold(spec, ds, plan, fold, train_rows);
            fold_result.fraction = fraction;
            report.folds.push_back(std::move(fold_result));
        }
    }
    report.aggregates = aggregate_folds(report.folds, band_mode);
    return report;
}

void save_fold_csv(const CvReport& report, const std::filesystem::path& path) {
    csv::Table table;
    table.header = {"fraction", "fold", "metric", "value"};
    for (const CvFold& fold : report.folds) {
        table.rows.push_back({csv::format_double(fold.fraction), std::to_string(fold.fold), "mse",
                              csv::format_double(fold.mse)});
        table.rows.push_back({csv::format_double(fold.fraction), std::to_string(fold.fold), "r2",
                              csv::format_double(fold.r2)});
    }
    csv::write_file(path, table);
}

void save_aggregate_csv(const CvReport& report, const std::filesystem::path& path) {
    csv::Table table;
    table.header = {"fraction", "metric", "mean", "std", "low", "high", "ks_p"};
    for (const Aggregate& agg : report.aggregates)
        table.rows.push_back({csv::format_double(agg.fraction), agg.metric,
                              csv::format_double(agg.mean), csv::format_double(agg.stddev),
                              csv::format_double(agg.low), csv::format_double(agg.high),
                              csv::format_double(agg.ks_p)});
    csv::write_file(path, table);
}

}  // namespace catembed::eval
