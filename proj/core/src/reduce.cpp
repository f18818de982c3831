#include "catembed/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "catembed/rng.hpp"

namespace catembed::reduce {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenRowMajor> as_eigen(const Matrix& m) {
    return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
            static_cast<Eigen::Index>(m.cols())};
}

void require_finite(const Matrix& m, const char* who) {
    for (double v : m.data())
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

}  // namespace

PcaModel pca_fit(const Matrix& X, std::size_t k) {
    const std::size_t n = X.rows(), d = X.cols();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");
    if (k < 1 || k > std::min(n - 1, d))
        throw std::invalid_argument("pca_fit: k=" + std::to_string(k) +
                                    " out of range [1, min(samples-1, d)=" +
                                    std::to_string(std::min(n - 1, d)) + "]");
    require_finite(X, "pca_fit");

    PcaModel model;
    model.k = k;
    model.column_means.resize(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += X(i, j);
        model.column_means[j] = sum / static_cast<double>(n);
    }

    Eigen::MatrixXd centered = as_eigen(X);
    for (Eigen::Index j = 0; j < centered.cols(); ++j)
        centered.col(j).array() -= model.column_means[static_cast<std::size_t>(j)];
    if (centered.cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("pca_fit: zero variance, all rows identical");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();

    model.total_variance = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        model.total_variance += sigma[i] * sigma[i] / static_cast<double>(n - 1);

    model.components = Matrix(k, d);
    model.explained_variance.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        model.explained_variance[c] =
            sigma[static_cast<Eigen::Index>(c)] * sigma[static_cast<Eigen::Index>(c)] /
            static_cast<double>(n - 1);
        // Sign convention: flip so the largest-magnitude entry is positive.
        std::size_t peak = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(svd.matrixV()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c))) >
                std::abs(svd.matrixV()(static_cast<Eigen::Index>(peak), static_cast<Eigen::Index>(c))))
                peak = j;
        const double flip =
            svd.matrixV()(static_cast<Eigen::Index>(peak), static_cast<Eigen::Index>(c)) < 0.0
                ? -1.0
                : 1.0;
        for (std::size_t j = 0; j < d; ++j)
            model.components(c, j) =
                flip * svd.matrixV()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
    }
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& X) {
    if (model.k == 0) throw std::invalid_argument("pca_transform: model not fitted");
    if (X.cols() != model.column_means.size())
        throw std::invalid_argument("pca_transform: expected " +
                                    std::to_string(model.column_means.size()) + " columns, got " +
                                    std::to_string(X.cols()));
    const std::size_t n = X.rows(), d = X.cols();
    Matrix out(n, model.k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < model.k; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                acc += (X(i, j) - model.column_means[j]) * model.components(c, j);
            out(i, c) = acc;
        }
    return out;
}

Matrix pca_inverse(const PcaModel& model, const Matrix& Z) {
    if (model.k == 0) throw std::invalid_argument("pca_inverse: model not fitted");
    if (Z.cols() != model.k)
        throw std::invalid_argument("pca_inverse: expected " + std::to_string(model.k) +
                                    " columns, got " + std::to_string(Z.cols()));
    const std::size_t n = Z.rows(), d = model.column_means.size();
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double acc = model.column_means[j];
            for (std::size_t c = 0; c < model.k; ++c) acc += Z(i, c) * model.components(c, j);
            out(i, j) = acc;
        }
    return out;
}

double reconstruction_error(const PcaModel& model, const Matrix& X) {
    const Matrix back = pca_inverse(model, pca_transform(model, X));
    double err = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < X.cols(); ++j) {
            const double diff = X(i, j) - back(i, j);
            err += diff * diff;
        }
    return err / static_cast<double>(X.rows());
}

KnnGraph exact_knn(const Matrix& X, std::size_t k) {
    const std::size_t n = X.rows();
    if (k < 1 || k >= n)
        throw std::invalid_argument("exact_knn: k=" + std::to_string(k) +
                                    " out of range [1, n-1=" + std::to_string(n - 1) + "]");
    require_finite(X, "exact_knn");

    KnnGraph graph;
    graph.indices.resize(n);
    graph.distances.resize(n);
    std::vector<std::pair<double, std::size_t>> order(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < X.cols(); ++c) {
                const double diff = X(i, c) - X(j, c);
                d2 += diff * diff;
            }
            order[m++] = {std::sqrt(d2), j};
        }
        std::sort(order.begin(), order.end());
        graph.indices[i].resize(k);
        graph.distances[i].resize(k);
        for (std::size_t t = 0; t < k; ++t) {
            graph.distances[i][t] = order[t].first;
            graph.indices[i][t] = order[t].second;
        }
    }
    return graph;
}

namespace {

constexpr double kSmoothTolerance = 1e-5;
constexpr int kSmoothIterations = 64;
constexpr double kMinKDistScale = 1e-3;

// Per-point local connectivity calibration: rho is the nearest positive
// distance, sigma solves sum_j exp(-max(0, d_ij - rho)/sigma) = log2(k).
void smooth_knn_distances(const KnnGraph& graph, std::size_t k, std::vector<double>& rho,
                          std::vector<double>& sigma) {
    const std::size_t n = graph.distances.size();
    const double target = std::log2(static_cast<double>(k));
    rho.assign(n, 0.0);
    sigma.assign(n, 0.0);

    double mean_all = 0.0;
    std::size_t count_all = 0;
    for (const auto& row : graph.distances)
        for (double d : row) {
            mean_all += d;
            ++count_all;
        }
    mean_all /= std::max<std::size_t>(count_all, 1);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& dist = graph.distances[i];
        double first_positive = 0.0, max_dist = 0.0;
        for (double d : dist) {
            max_dist = std::max(max_dist, d);
            if (d > 0.0 && first_positive == 0.0) first_positive = d;
        }
        rho[i] = first_positive > 0.0 ? first_positive : max_dist;

        double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
        for (int it = 0; it < kSmoothIterations; ++it) {
            double psum = 0.0;
            for (double d : dist) {
                const double gap = d - rho[i];
                psum += gap > 0.0 ? std::exp(-gap / mid) : 1.0;
            }
            if (std::abs(psum - target) < kSmoothTolerance) break;
            if (psum > target) {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
            }
        }
        sigma[i] = mid;

        double mean_i = 0.0;
        for (double d : dist) mean_i += d;
        mean_i /= static_cast<double>(dist.size());
        if (rho[i] > 0.0)
            sigma[i] = std::max(sigma[i], kMinKDistScale * mean_i);
        else
            sigma[i] = std::max(sigma[i], kMinKDistScale * mean_all);
    }
}

struct Edge {
    std::size_t head = 0;
    std::size_t tail = 0;
    double weight = 0.0;
};

// Directed membership strengths merged by fuzzy union, both orientations kept
// so the layout pass pulls from either endpoint.
std::vector<Edge> fuzzy_simplicial_set(const KnnGraph& graph, const std::vector<double>& rho,
                                       const std::vector<double>& sigma) {
    const std::size_t n = graph.indices.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> directed(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < graph.indices[i].size(); ++t) {
            const double gap = graph.distances[i][t] - rho[i];
            const double w = gap > 0.0 ? std::exp(-gap / sigma[i]) : 1.0;
            directed[i].push_back({graph.indices[i][t], w});
        }

    auto directed_weight = [&](std::size_t a, std::size_t b) {
        for (const auto& [j, w] : directed[a])
            if (j == b) return w;
        return 0.0;
    };

    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [j, w_ij] : directed[i]) {
            if (j < i && directed_weight(j, i) > 0.0) continue;  // already merged from j's side
            const double w_ji = directed_weight(j, i);
            const double w = w_ij + w_ji - w_ij * w_ji;
            if (w <= 0.0) continue;
            edges.push_back({i, j, w});
            edges.push_back({j, i, w});
        }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.head != b.head ? a.head < b.head : a.tail < b.tail;
    });
    return edges;
}

Matrix spectral_init(const std::vector<Edge>& edges, std::size_t n, std::size_t dim, Rng& rng) {
    Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n));
    for (const auto& e : edges)
        adjacency(static_cast<Eigen::Index>(e.head), static_cast<Eigen::Index>(e.tail)) = e.weight;

    Eigen::VectorXd degree = adjacency.rowwise().sum();
    Eigen::VectorXd inv_sqrt(degree.size());
    for (Eigen::Index i = 0; i < degree.size(); ++i)
        inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;

    // Normalized graph Laplacian; the trailing-from-zero eigenvectors give
    // the layout seed, skipping the constant mode.
    Eigen::MatrixXd laplacian =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) -
        inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);

    Matrix init(n, dim);
    if (solver.info() != Eigen::Success) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dim; ++j) init(i, j) = rng.uniform(-10.0, 10.0);
        return init;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            init(i, j) = solver.eigenvectors()(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j + 1));

    double max_abs = 0.0;
    for (double v : init.data()) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs < 1e-12) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < dim; ++j) init(i, j) = rng.uniform(-10.0, 10.0);
        return init;
    }
    const double expansion = 10.0 / max_abs;
    for (double& v : init.data()) v = v * expansion + rng.normal(0.0, 1e-4);
    return init;
}

double clip4(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

AbParams find_ab(double min_dist, double spread) {
    if (!(spread > 0.0)) throw std::invalid_argument("find_ab: spread must be positive");
    if (min_dist < 0.0) throw std::invalid_argument("find_ab: min_dist must be non-negative");

    constexpr int kPoints = 300;
    std::vector<double> x(kPoints), y(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        x[i] = 3.0 * spread * static_cast<double>(i) / static_cast<double>(kPoints - 1);
        y[i] = x[i] < min_dist ? 1.0 : std::exp(-(x[i] - min_dist) / spread);
    }

    // Levenberg-Marquardt on the two curve parameters.
    double a = 1.0, b = 1.0, damping = 1e-3;
    auto sse = [&](double pa, double pb) {
        double s = 0.0;
        for (int i = 0; i < kPoints; ++i) {
            const double pw = x[i] > 0.0 ? std::pow(x[i], 2.0 * pb) : 0.0;
            const double r = 1.0 / (1.0 + pa * pw) - y[i];
            s += r * r;
        }
        return s;
    };
    double current = sse(a, b);
    for (int it = 0; it < 200; ++it) {
        double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
        for (int i = 0; i < kPoints; ++i) {
            if (x[i] <= 0.0) continue;
            const double pw = std::pow(x[i], 2.0 * b);
            const double denom = 1.0 + a * pw;
            const double f = 1.0 / denom;
            const double r = f - y[i];
            const double dfda = -pw / (denom * denom);
            const double dfdb = -2.0 * a * pw * std::log(x[i]) / (denom * denom);
            jaa += dfda * dfda;
            jab += dfda * dfdb;
            jbb += dfdb * dfdb;
            ga += dfda * r;
            gb += dfdb * r;
        }
        const double det = (jaa + damping) * (jbb + damping) - jab * jab;
        if (std::abs(det) < 1e-300) break;
        const double step_a = (-(jbb + damping) * ga + jab * gb) / det;
        const double step_b = (jab * ga - (jaa + damping) * gb) / det;
        const double na = a + step_a, nb = b + step_b;
        const double next = nb > 0.0 && na > 0.0 ? sse(na, nb) : current + 1.0;
        if (next < current) {
            a = na;
            b = nb;
            current = next;
            damping = std::max(damping / 10.0, 1e-12);
            if (std::abs(step_a) + std::abs(step_b) < 1e-12) break;
        } else {
            damping *= 10.0;
            if (damping > 1e12) break;
        }
    }
    return {a, b};
}

Matrix umap_fit_transform(const Matrix& X, const UmapParams& params) {
    const std::size_t n = X.rows();
    if (n < 4) throw std::invalid_argument("umap: need at least 4 samples");
    if (params.target_dim < 1) throw std::invalid_argument("umap: target_dim must be >= 1");
    require_finite(X, "umap");

    std::size_t k = params.n_neighbors;
    if (k == 0) k = std::min<std::size_t>(15, n - 1);
    if (k >= n)
        throw std::invalid_argument("umap: n_neighbors=" + std::to_string(k) +
                                    " must be below the sample count " + std::to_string(n));
    if (k < 2) throw std::invalid_argument("umap: n_neighbors must be >= 2");
    if (params.n_epochs < 1) throw std::invalid_argument("umap: n_epochs must be >= 1");
    if (params.negative_sample_rate < 1)
        throw std::invalid_argument("umap: negative_sample_rate must be >= 1");

    const KnnGraph graph = exact_knn(X, k);
    std::vector<double> rho, sigma;
    smooth_knn_distances(graph, k, rho, sigma);
    std::vector<Edge> edges = fuzzy_simplicial_set(graph, rho, sigma);

    // Edges too weak to be sampled even once are dropped up front.
    double w_max = 0.0;
    for (const auto& e : edges) w_max = std::max(w_max, e.weight);
    const double floor = w_max / static_cast<double>(params.n_epochs);
    std::erase_if(edges, [&](const Edge& e) { return e.weight < floor; });
    if (edges.empty()) throw std::runtime_error("umap: neighbor graph collapsed to no edges");

    Rng rng(derive_seed(params.seed, "umap-layout"));
    Matrix embedding = spectral_init(edges, n, params.target_dim, rng);

    const AbParams ab = find_ab(params.min_dist, 1.0);
    const std::size_t dim = params.target_dim;
    const double n_epochs = static_cast<double>(params.n_epochs);

    std::vector<double> epochs_per_sample(edges.size());
    std::vector<double> epoch_of_next_sample(edges.size());
    std::vector<double> epochs_per_negative(edges.size());
    std::vector<double> epoch_of_next_negative(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        epochs_per_sample[e] = w_max / edges[e].weight;
        epoch_of_next_sample[e] = epochs_per_sample[e];
        epochs_per_negative[e] =
            epochs_per_sample[e] / static_cast<double>(params.negative_sample_rate);
        epoch_of_next_negative[e] = epochs_per_negative[e];
    }

    constexpr double kRepulsionStrength = 1.0;
    for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double alpha = 1.0 - static_cast<double>(epoch) / n_epochs;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (epoch_of_next_sample[e] > static_cast<double>(epoch + 1)) continue;
            auto head = embedding.row(edges[e].head);
            auto tail = embedding.row(edges[e].tail);

            double dist2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double diff = head[c] - tail[c];
                dist2 += diff * diff;
            }
            if (dist2 > 0.0) {
                const double grad_coeff = (-2.0 * ab.a * ab.b * std::pow(dist2, ab.b - 1.0)) /
                                          (ab.a * std::pow(dist2, ab.b) + 1.0);
                for (std::size_t c = 0; c < dim; ++c) {
                    const double g = clip4(grad_coeff * (head[c] - tail[c]));
                    head[c] += alpha * g;
                    tail[c] -= alpha * g;
                }
            }
            epoch_of_next_sample[e] += epochs_per_sample[e];

            const int n_neg = static_cast<int>(
                (static_cast<double>(epoch + 1) - epoch_of_next_negative[e]) /
                epochs_per_negative[e]);
            for (int t = 0; t < n_neg; ++t) {
                const std::size_t other = static_cast<std::size_t>(rng.below(n));
                if (other == edges[e].head) continue;
                auto neg = embedding.row(other);
                double nd2 = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    const double diff = head[c] - neg[c];
                    nd2 += diff * diff;
                }
                if (nd2 > 0.0) {
                    const double grad_coeff =
                        (2.0 * kRepulsionStrength * ab.b) /
                        ((0.001 + nd2) * (ab.a * std::pow(nd2, ab.b) + 1.0));
                    for (std::size_t c = 0; c < dim; ++c)
                        head[c] += alpha * clip4(grad_coeff * (head[c] - neg[c]));
                } else {
                    // Coincident points with no gradient still get a nudge so
                    // they can separate.
                    for (std::size_t c = 0; c < dim; ++c) head[c] += alpha * 4.0;
                }
            }
            epoch_of_next_negative[e] += n_neg * epochs_per_negative[e];
        }
    }

    for (double v : embedding.data())
        if (!std::isfinite(v)) throw std::runtime_error("umap: layout diverged to non-finite values");
    return embedding;
}

}  // namespace catembed::reduce
