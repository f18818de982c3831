#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "catembed/matrix.hpp"
#include "catembed/tabular.hpp"

namespace catembed::gbt {

struct GbtParams {
    int n_rounds = 200;
    int max_depth = 4;
    double learning_rate = 0.1;
    double lambda = 1.0;            // leaf L2 regularization
    double gamma = 0.0;             // minimum split gain
    double min_child_weight = 1.0;  // minimum hessian sum per child
    // NaN = resolve to mean(y) at fit time.
    double base_score = std::numeric_limits<double>::quiet_NaN();
    double subsample = 1.0;         // row fraction per round, 1 = off
    double colsample = 1.0;         // feature fraction per tree, 1 = off
    std::uint64_t seed = 1;

    void validate() const;
};

/// One node of a regression tree, stored in a flat array. Leaf weights are
/// kept unscaled; the learning rate is applied at accumulation time.
struct TreeNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    bool default_left = true;  // missing values follow this branch
    double gain = 0.0;         // split gain by the regularized formula
    double cover = 0.0;        // hessian sum = training rows reaching the node
    double weight = 0.0;       // leaf output
};

using Tree = std::vector<TreeNode>;

struct GbtModel {
    double base_score = 0.0;
    std::vector<Tree> trees;
    std::size_t n_features = 0;
    std::vector<std::string> feature_names;
    GbtParams params;
    std::vector<double> train_mse;  // after each boosting round

    double predict_row(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& X) const;

    /// JSON round trip is bit-exact on every stored double.
    std::string to_json() const;
    static GbtModel from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static GbtModel load(const std::filesystem::path& path);
};

/// Exact greedy boosting with squared-error loss. NaN feature values are
/// treated as missing and routed by the learned default branch; infinities
/// are rejected.
GbtModel fit(const Matrix& X, const std::vector<double>& y, const GbtParams& params,
             std::vector<std::string> feature_names = {});
GbtModel fit(const tabular::DesignMatrix& X, const std::vector<double>& y,
             const GbtParams& params);

/// score(f) = sum of split gains over every split on f, 0 if never used.
std::map<std::string, double> total_gain_importance(const GbtModel& model);

/// Sums member feature scores per group; every feature must be grouped.
std::map<std::string, double> grouped_importance(
    const std::map<std::string, double>& importance,
    const std::map<std::string, std::string>& group_of);
std::map<std::string, double> grouped_importance(const std::map<std::string, double>& importance,
                                                 const tabular::DesignMatrix& design);

}  // namespace catembed::gbt
