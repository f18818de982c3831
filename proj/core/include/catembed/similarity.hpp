#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "catembed/matrix.hpp"

namespace catembed::sim {

/// Cosine similarity, clamped to [-1, 1] against rounding drift. A zero-norm
/// operand yields 0 and a warning rather than NaN.
double cosine(std::span<const double> a, std::span<const double> b);

struct SimilarityMatrix {
    std::vector<std::string> labels;
    Matrix values;  // labels.size() square, symmetric, unit diagonal

    double at(std::size_t i, std::size_t j) const { return values(i, j); }
    std::size_t size() const { return labels.size(); }
};

/// Pairwise cosine over the rows of `vectors` (one row per label).
SimilarityMatrix similarity_matrix(const std::vector<std::string>& labels,
                                   const Matrix& vectors);

/// CSV layout: first row/column carry the labels, the corner cell is empty.
/// Values survive a save/load round trip bit for bit.
void save_similarity(const SimilarityMatrix& m, const std::filesystem::path& path);
SimilarityMatrix load_similarity(const std::filesystem::path& path);

}  // namespace catembed::sim
