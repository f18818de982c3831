#pragma once

#include <cstdint>
#include <vector>

#include "catembed/matrix.hpp"

namespace catembed::reduce {

struct PcaModel {
    std::vector<double> column_means;
    Matrix components;                       // k x d, orthonormal rows
    std::vector<double> explained_variance;  // per kept component, sample-variance units
    double total_variance = 0.0;             // across all components, for ratio reporting
    std::size_t k = 0;
};

/// Centers X and keeps the top-k right singular vectors. Component rows are
/// sign-fixed so the largest-magnitude entry is positive. Requires
/// 1 <= k <= min(samples-1, d) and non-degenerate input (not all rows equal).
PcaModel pca_fit(const Matrix& X, std::size_t k);

Matrix pca_transform(const PcaModel& model, const Matrix& X);
Matrix pca_inverse(const PcaModel& model, const Matrix& Z);

/// Mean squared Frobenius error between X and its project-reconstruct image,
/// normalized by the sample count.
double reconstruction_error(const PcaModel& model, const Matrix& X);

struct UmapParams {
    std::size_t n_neighbors = 0;  // 0 = auto: min(15, n-1)
    std::size_t target_dim = 3;
    double min_dist = 0.1;
    std::size_t n_epochs = 500;
    std::size_t negative_sample_rate = 5;
    std::uint64_t seed = 1;
};

struct KnnGraph {
    std::vector<std::vector<std::size_t>> indices;  // n x k, nearest first
    std::vector<std::vector<double>> distances;     // parallel Euclidean distances
};

/// Brute-force exact nearest neighbors, self excluded, distance ties broken
/// by index so the graph is identical across platforms.
KnnGraph exact_knn(const Matrix& X, std::size_t k);

struct AbParams {
    double a = 0.0;
    double b = 0.0;
};

/// Least-squares fit of 1/(1 + a*d^(2b)) to the piecewise-exponential
/// membership target defined by min_dist and spread.
AbParams find_ab(double min_dist, double spread);

/// Full small-scale layout pipeline: exact k-NN, smoothed local distance
/// calibration, fuzzy union symmetrization, spectral initialization, then
/// stochastic gradient layout with negative sampling. Deterministic per seed.
Matrix umap_fit_transform(const Matrix& X, const UmapParams& params);

}  // namespace catembed::reduce
