#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "catembed/pipeline.hpp"
#include "catembed/tabular.hpp"

namespace catembed::eval {

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // sample index -> fold id
    std::uint64_t seed = 0;

    std::vector<int> test_rows(int fold) const;
    std::vector<int> train_rows(int fold) const;
};

/// Shuffled balanced assignment; fold sizes differ by at most one.
FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed);

double mse(std::span<const double> y, std::span<const double> y_hat);
/// 1 - SSres/SStot; a constant target is an error.
double r2(std::span<const double> y, std::span<const double> y_hat);

/// One-sample KS statistic against a normal with sample-estimated mean and
/// stddev; p-value from the asymptotic Kolmogorov distribution with the
/// finite-sample refinement of the statistic. Estimating the parameters from
/// the same sample makes the p-value conservative (a Lilliefors-style setup).
double ks_normality(std::span<const double> values);

enum class BandMode {
    OneSigma,      // mean +/- one sample stddev, the figure convention
    TInterval999,  // 99.9% t-interval for the mean, the prose convention
};

struct Band {
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev, n-1 denominator
    double low = 0.0;
    double high = 0.0;
};

Band confidence_band(std::span<const double> values, BandMode mode = BandMode::OneSigma);

struct CvFold {
    double fraction = 1.0;
    int fold = 0;
    double mse = 0.0;
    double r2 = 0.0;
    std::string model_json;  // fitted pipeline state, kept for leakage audits
};

/// Fits the full pipeline inside each training fold and scores the held-out
/// fold. Nothing is fitted on test rows.
std::vector<CvFold> cross_validate(const pipeline::PipelineSpec& spec,
                                   const tabular::Dataset& ds, const FoldPlan& plan);
std::vector<CvFold> cross_validate(const pipeline::PipelineSpec& spec,
                                   const tabular::Dataset& ds, int k, std::uint64_t seed);

struct Aggregate {
    double fraction = 1.0;
    std::string metric;  // "mse" | "r2"
    double mean = 0.0;
    double stddev = 0.0;
    double low = 0.0;
    double high = 0.0;
    double ks_p = 0.0;  // NaN when the fold count is below 3
};

struct CvReport {
    std::vector<CvFold> folds;
    std::vector<Aggregate> aggregates;
    BandMode band_mode = BandMode::OneSigma;
};

std::vector<Aggregate> aggregate_folds(const std::vector<CvFold>& folds, BandMode mode);

/// Per fraction, subsamples each fold's training rows without replacement
/// (re-drawn per fold, deterministic) before fitting. The fraction-1.0 rows
/// coincide with plain cross-validation under the same plan.
CvReport learning_curve(const pipeline::PipelineSpec& spec, const tabular::Dataset& ds, int k,
                        const std::vector<double>& fractions, std::uint64_t seed,
                        BandMode band_mode = BandMode::OneSigma);

/// CSV `fraction,fold,metric,value`, two metric rows per fold.
void save_fold_csv(const CvReport& report, const std::filesystem::path& path);
/// CSV `fraction,metric,mean,std,low,high,ks_p`.
void save_aggregate_csv(const CvReport& report, const std::filesystem::path& path);

}  // namespace catembed::eval
