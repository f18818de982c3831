#include "catembed/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "catembed/csv.hpp"
#include "catembed/log.hpp"

namespace catembed::sim {

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw std::invalid_argument("cosine: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        logging::warn("cosine: zero-norm vector, similarity reported as 0");
        return 0.0;
    }
    const double value = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(value, -1.0, 1.0);
}

SimilarityMatrix similarity_matrix(const std::vector<std::string>& labels,
                                   const Matrix& vectors) {
    if (labels.size() != vectors.rows())
        throw std::invalid_argument("similarity_matrix: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(vectors.rows()) + " vectors");
    if (labels.empty()) throw std::invalid_argument("similarity_matrix: no vectors");

    SimilarityMatrix out;
    out.labels = labels;
    const std::size_t n = labels.size();
    out.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = cosine(vectors.row(i), vectors.row(j));
            out.values(i, j) = s;
            out.values(j, i) = s;
        }
    }
    return out;
}

void save_similarity(const SimilarityMatrix& m, const std::filesystem::path& path) {
    const std::size_t n = m.labels.size();
    csv::Table table;
    table.header.push_back("");
    for (const auto& label : m.labels) table.header.push_back(label);
    table.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row;
        row.reserve(n + 1);
        row.push_back(m.labels[i]);
        for (std::size_t j = 0; j < n; ++j) row.push_back(csv::format_double(m.values(i, j)));
        table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
}

SimilarityMatrix load_similarity(const std::filesystem::path& path) {
    const csv::Table table = csv::read_file(path);
    if (table.header.empty() || !table.header[0].empty())
        throw std::runtime_error("similarity matrix " + path.string() +
                                 ": corner cell of the header must be empty");
    const std::size_t n = table.header.size() - 1;
    if (n == 0) throw std::runtime_error("similarity matrix " + path.string() + ": no labels");
    if (table.rows.size() != n)
        throw std::runtime_error("similarity matrix " + path.string() + ": expected " +
                                 std::to_string(n) + " rows, found " +
                                 std::to_string(table.rows.size()));

    SimilarityMatrix out;
    out.labels.assign(table.header.begin() + 1, table.header.end());
    out.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        if (row.size() != n + 1)
            throw std::runtime_error("similarity matrix " + path.string() + ": row " +
                                     std::to_string(i + 2) + " has " + std::to_string(row.size()) +
                                     " fields, expected " + std::to_string(n + 1));
        if (row[0] != out.labels[i])
            throw std::runtime_error("similarity matrix " + path.string() + ": row label '" +
                                     row[0] + "' does not match column label '" + out.labels[i] +
                                     "'");
        for (std::size_t j = 0; j < n; ++j) {
            char* end = nullptr;
            const double v = std::strtod(row[j + 1].c_str(), &end);
            if (end == row[j + 1].c_str() || *end != '\0' || !std::isfinite(v))
                throw std::runtime_error("similarity matrix " + path.string() + ": row " +
                                         std::to_string(i + 2) + ": cannot parse '" + row[j + 1] +
                                         "' as a finite number");
            out.values(i, j) = v;
        }
    }
    return out;
}

}  // namespace catembed::sim
