#include "catembed/shap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "catembed/csv.hpp"

namespace catembed::shap {

namespace {

// Element of the unique feature path maintained during tree descent. The
// pweight entries track, per subset size, the proportion of feature subsets
// that keep the sample flowing to the current node.
struct PathElement {
    int feature_index = -1;
    double zero_fraction = 0.0;
    double one_fraction = 0.0;
    double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature_index) {
    path[depth].feature_index = feature_index;
    path[depth].zero_fraction = zero_fraction;
    path[depth].one_fraction = one_fraction;
    path[depth].pweight = depth == 0 ? 1.0 : 0.0;
    for (int i = depth - 1; i >= 0; --i) {
        path[i + 1].pweight +=
            one_fraction * path[i].pweight * (i + 1.0) / (depth + 1.0);
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / (depth + 1.0);
    }
}

void unwind_path(PathElement* path, int depth, int index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    for (int i = depth - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = path[i].pweight;
            path[i].pweight = next_one_portion * (depth + 1.0) / ((i + 1.0) * one_fraction);
            next_one_portion =
                tmp - path[i].pweight * zero_fraction * (depth - i) / (depth + 1.0);
        } else {
            path[i].pweight = path[i].pweight * (depth + 1.0) / (zero_fraction * (depth - i));
        }
    }
    for (int i = index; i < depth; ++i) {
        path[i].feature_index = path[i + 1].feature_index;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    double total = 0.0;
    for (int i = depth - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = next_one_portion * (depth + 1.0) / ((i + 1.0) * one_fraction);
            total += tmp;
            next_one_portion =
                path[i].pweight - tmp * zero_fraction * ((depth - i) / (depth + 1.0));
        } else if (zero_fraction != 0.0) {
            total += (path[i].pweight / zero_fraction) / ((depth - i) / (depth + 1.0));
        }
    }
    return total;
}

struct TreeShapContext {
    const gbt::Tree& tree;
    std::span<const double> x;
    std::vector<double>& phi;
    double scale;  // learning rate applied once per tree
};

void tree_shap_recurse(const TreeShapContext& ctx, int node_index, int unique_depth,
                       PathElement* parent_path, double parent_zero_fraction,
                       double parent_one_fraction, int parent_feature_index) {
    // Each level gets its own copy of the path, so unwinding in one branch
    // cannot corrupt the other.
    PathElement* path = parent_path + unique_depth + 1;
    std::copy(parent_path, parent_path + unique_depth + 1, path);
    extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction,
                parent_feature_index);

    const gbt::TreeNode& node = ctx.tree[static_cast<std::size_t>(node_index)];
    if (node.is_leaf) {
        for (int i = 1; i <= unique_depth; ++i) {
            const double w = unwound_path_sum(path, unique_depth, i);
            const PathElement& el = path[i];
            ctx.phi[static_cast<std::size_t>(el.feature_index)] +=
                w * (el.one_fraction - el.zero_fraction) * node.weight * ctx.scale;
        }
        return;
    }

    const double v = ctx.x[static_cast<std::size_t>(node.feature)];
    const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
    const int hot = go_left ? node.left : node.right;
    const int cold = go_left ? node.right : node.left;
    const double hot_zero_fraction =
        ctx.tree[static_cast<std::size_t>(hot)].cover / node.cover;
    const double cold_zero_fraction =
        ctx.tree[static_cast<std::size_t>(cold)].cover / node.cover;

    double incoming_zero_fraction = 1.0;
    double incoming_one_fraction = 1.0;
    // A repeated split on the same feature is undone and merged, keeping the
    // path entries unique per feature.
    int path_index = 0;
    while (path_index <= unique_depth &&
           path[path_index].feature_index != node.feature)
        ++path_index;
    if (path_index != unique_depth + 1) {
        incoming_zero_fraction = path[path_index].zero_fraction;
        incoming_one_fraction = path[path_index].one_fraction;
        unwind_path(path, unique_depth, path_index);
        unique_depth -= 1;
    }

    tree_shap_recurse(ctx, hot, unique_depth + 1, path,
                      hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction,
                      node.feature);
    tree_shap_recurse(ctx, cold, unique_depth + 1, path,
                      cold_zero_fraction * incoming_zero_fraction, 0.0, node.feature);
}

int tree_depth(const gbt::Tree& tree, int node_index) {
    const gbt::TreeNode& node = tree[static_cast<std::size_t>(node_index)];
    if (node.is_leaf) return 0;
    return 1 + std::max(tree_depth(tree, node.left), tree_depth(tree, node.right));
}

double expected_leaf_value(const gbt::Tree& tree, int node_index) {
    const gbt::TreeNode& node = tree[static_cast<std::size_t>(node_index)];
    if (node.is_leaf) return node.weight;
    const double left_cover = tree[static_cast<std::size_t>(node.left)].cover;
    const double right_cover = tree[static_cast<std::size_t>(node.right)].cover;
    return (left_cover * expected_leaf_value(tree, node.left) +
            right_cover * expected_leaf_value(tree, node.right)) /
           node.cover;
}

}  // namespace

ShapMatrix tree_shap(const gbt::GbtModel& model, const Matrix& X) {
    if (X.cols() != model.n_features)
        throw std::invalid_argument("tree_shap: expected " + std::to_string(model.n_features) +
                                    " features, got " + std::to_string(X.cols()));
    for (const gbt::Tree& tree : model.trees)
        for (const gbt::TreeNode& node : tree)
            if (node.cover <= 0.0)
                throw std::invalid_argument(
                    "tree_shap: model lacks positive cover metadata, cannot weight paths");

    ShapMatrix out;
    out.feature_names = model.feature_names;
    out.values = Matrix(X.rows(), model.n_features);
    out.base_value = model.base_score;
    for (const gbt::Tree& tree : model.trees)
        out.base_value += model.params.learning_rate * expected_leaf_value(tree, 0);

    int max_depth = 0;
    for (const gbt::Tree& tree : model.trees)
        max_depth = std::max(max_depth, tree_depth(tree, 0));
    // Triangular scratch buffer: level d holds a path of d+1 elements.
    std::vector<PathElement> scratch(
        static_cast<std::size_t>((max_depth + 2) * (max_depth + 3)) / 2);

    std::vector<double> phi(model.n_features);
    for (std::size_t s = 0; s < X.rows(); ++s) {
        std::fill(phi.begin(), phi.end(), 0.0);
        for (const gbt::Tree& tree : model.trees) {
            TreeShapContext ctx{tree, X.row(s), phi, model.params.learning_rate};
            tree_shap_recurse(ctx, 0, 0, scratch.data(), 1.0, 1.0, -1);
        }
        for (std::size_t f = 0; f < model.n_features; ++f) out.values(s, f) = phi[f];
    }
    return out;
}

std::map<std::string, double> grouped_shap(const ShapMatrix& shap,
                                           const std::map<std::string, std::string>& group_of,
                                           bool per_column_mean) {
    if (shap.values.rows() == 0) throw std::invalid_argument("grouped_shap: no samples");
    std::vector<const std::string*> group_per_column(shap.feature_names.size());
    for (std::size_t f = 0; f < shap.feature_names.size(); ++f) {
        auto it = group_of.find(shap.feature_names[f]);
        if (it == group_of.end())
            throw std::invalid_argument("grouped_shap: feature '" + shap.feature_names[f] +
                                        "' has no group");
        group_per_column[f] = &it->second;
    }

    const double n = static_cast<double>(shap.values.rows());
    std::map<std::string, double> out;
    if (per_column_mean) {
        // Alternative reading: average the per-column mean |value| within the
        // group instead of summing columns inside each sample.
        std::map<std::string, std::pair<double, std::size_t>> acc;
        for (std::size_t f = 0; f < shap.feature_names.size(); ++f) {
            double mean_abs = 0.0;
            for (std::size_t s = 0; s < shap.values.rows(); ++s)
                mean_abs += std::abs(shap.values(s, f));
            mean_abs /= n;
            auto& slot = acc[*group_per_column[f]];
            slot.first += mean_abs;
            slot.second += 1;
        }
        for (const auto& [group, slot] : acc)
            out[group] = slot.first / static_cast<double>(slot.second);
        return out;
    }

    std::map<std::string, double> row_sum;
    for (const auto* group : group_per_column) out.emplace(*group, 0.0);
    for (std::size_t s = 0; s < shap.values.rows(); ++s) {
        row_sum.clear();
        for (std::size_t f = 0; f < shap.feature_names.size(); ++f)
            row_sum[*group_per_column[f]] += shap.values(s, f);
        for (const auto& [group, total] : row_sum) out[group] += std::abs(total);
    }
    for (auto& [group, total] : out) total /= n;
    return out;
}

std::vector<RankedGroup> rank_report(const std::map<std::string, double>& scores,
                                     const std::map<std::string, std::string>& kind_of,
                                     int top_k) {
    if (top_k <= 0) throw std::invalid_argument("rank_report: top_k must be positive");
    std::vector<RankedGroup> rows;
    rows.reserve(scores.size());
    for (const auto& [group, score] : scores) {
        auto it = kind_of.find(group);
        if (it == kind_of.end())
            throw std::invalid_argument("rank_report: group '" + group + "' has no kind tag");
        rows.push_back({group, it->second, score});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const RankedGroup& a, const RankedGroup& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.group < b.group;
    });
    if (rows.size() > static_cast<std::size_t>(top_k))
        rows.resize(static_cast<std::size_t>(top_k));
    return rows;
}

void save_report(const std::vector<RankedGroup>& report, const std::filesystem::path& path) {
    csv::Table table;
    table.header = {"group", "kind", "score"};
    for (const auto& row : report)
        table.rows.push_back({row.group, row.kind, csv::format_double(row.score)});
    csv::write_file(path, table);
}

}  // namespace catembed::shap
