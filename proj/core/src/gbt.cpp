#include "catembed/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "catembed/rng.hpp"

namespace catembed::gbt {

void GbtParams::validate() const {
    if (n_rounds < 1) throw std::invalid_argument("gbt: n_rounds must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("gbt: max_depth must be >= 1");
    if (!(learning_rate > 0.0) || learning_rate > 1.0)
        throw std::invalid_argument("gbt: learning_rate must be in (0, 1]");
    if (lambda < 0.0) throw std::invalid_argument("gbt: lambda must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("gbt: gamma must be >= 0");
    if (min_child_weight < 0.0) throw std::invalid_argument("gbt: min_child_weight must be >= 0");
    if (!(subsample > 0.0) || subsample > 1.0)
        throw std::invalid_argument("gbt: subsample must be in (0, 1]");
    if (!(colsample > 0.0) || colsample > 1.0)
        throw std::invalid_argument("gbt: colsample must be in (0, 1]");
}

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    double gain = 0.0;  // raw formula value, gamma not subtracted
};

// A split must clear gamma by a positive margin; gamma=0 then still rejects
// pure zero-gain splits, which keeps constant targets at single leaves.
constexpr double kGainEpsilon = 1e-12;

SplitChoice find_best_split(const Matrix& X, const std::vector<double>& grad,
                            const std::vector<int>& rows, const std::vector<int>& features,
                            const GbtParams& params) {
    const double g_total = [&] {
        double s = 0.0;
        for (int r : rows) s += grad[static_cast<std::size_t>(r)];
        return s;
    }();
    const double h_total = static_cast<double>(rows.size());
    const double parent_score = g_total * g_total / (h_total + params.lambda);

    SplitChoice best;
    std::vector<std::pair<double, int>> present;
    for (int f : features) {
        present.clear();
        double g_missing = 0.0;
        double h_missing = 0.0;
        for (int r : rows) {
            const double v = X(static_cast<std::size_t>(r), static_cast<std::size_t>(f));
            if (std::isnan(v)) {
                g_missing += grad[static_cast<std::size_t>(r)];
                h_missing += 1.0;
            } else {
                present.push_back({v, r});
            }
        }
        if (present.size() < 2) continue;
        std::sort(present.begin(), present.end());

        const bool has_missing = h_missing > 0.0;
        double g_left = 0.0;
        double h_left = 0.0;
        for (std::size_t j = 0; j + 1 < present.size(); ++j) {
            g_left += grad[static_cast<std::size_t>(present[j].second)];
            h_left += 1.0;
            if (present[j].first == present[j + 1].first) continue;
            const double threshold = (present[j].first + present[j + 1].first) / 2.0;

            // Missing rows tried on each side; identical when there are none.
            for (int dir = 0; dir < (has_missing ? 2 : 1); ++dir) {
                const bool missing_left = dir == 0;
                const double gl = g_left + (missing_left ? g_missing : 0.0);
                const double hl = h_left + (missing_left ? h_missing : 0.0);
                const double gr = g_total - gl;
                const double hr = h_total - hl;
                if (hl < params.min_child_weight || hr < params.min_child_weight) continue;
                const double gain = 0.5 * (gl * gl / (hl + params.lambda) +
                                           gr * gr / (hr + params.lambda) - parent_score);
                if (gain - params.gamma <= kGainEpsilon) continue;
                // Strict improvement keeps the first candidate on ties, and the
                // scan order (feature, then threshold, then missing-left) is
                // exactly the documented tie-break.
                if (!best.found || gain > best.gain) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = threshold;
                    best.default_left = missing_left;
                    best.gain = gain;
                }
            }
        }
    }
    return best;
}

struct BuildTask {
    std::vector<int> rows;
    int depth = 0;
    int node = 0;
};

Tree build_tree(const Matrix& X, const std::vector<double>& grad, const std::vector<int>& rows,
                const std::vector<int>& features, const GbtParams& params) {
    Tree tree(1);
    std::vector<BuildTask> stack;
    stack.push_back({rows, 0, 0});
    while (!stack.empty()) {
        BuildTask task = std::move(stack.back());
        stack.pop_back();

        double g = 0.0;
        for (int r : task.rows) g += grad[static_cast<std::size_t>(r)];
        const double h = static_cast<double>(task.rows.size());
        TreeNode& node = tree[static_cast<std::size_t>(task.node)];
        node.cover = h;

        SplitChoice split;
        if (task.depth < params.max_depth)
            split = find_best_split(X, grad, task.rows, features, params);
        if (!split.found) {
            node.is_leaf = true;
            node.weight = -g / (h + params.lambda);
            continue;
        }

        node.is_leaf = false;
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.default_left = split.default_left;
        node.gain = split.gain;
        node.weight = 0.0;

        std::vector<int> left_rows, right_rows;
        for (int r : task.rows) {
            const double v =
                X(static_cast<std::size_t>(r), static_cast<std::size_t>(split.feature));
            const bool go_left = std::isnan(v) ? split.default_left : v < split.threshold;
            (go_left ? left_rows : right_rows).push_back(r);
        }

        const int left_index = static_cast<int>(tree.size());
        const int right_index = left_index + 1;
        // Growing the array invalidates `node`, so children are linked through
        // the task index afterwards.
        tree.emplace_back();
        tree.emplace_back();
        tree[static_cast<std::size_t>(task.node)].left = left_index;
        tree[static_cast<std::size_t>(task.node)].right = right_index;
        stack.push_back({std::move(right_rows), task.depth + 1, right_index});
        stack.push_back({std::move(left_rows), task.depth + 1, left_index});
    }
    return tree;
}

double route(const Tree& tree, std::span<const double> x) {
    int at = 0;
    while (!tree[static_cast<std::size_t>(at)].is_leaf) {
        const TreeNode& node = tree[static_cast<std::size_t>(at)];
        const double v = x[static_cast<std::size_t>(node.feature)];
        const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
        at = go_left ? node.left : node.right;
    }
    return tree[static_cast<std::size_t>(at)].weight;
}

}  // namespace

double GbtModel::predict_row(std::span<const double> x) const {
    if (x.size() != n_features)
        throw std::invalid_argument("gbt predict: expected " + std::to_string(n_features) +
                                    " features, got " + std::to_string(x.size()));
    double acc = base_score;
    for (const Tree& tree : trees) acc += params.learning_rate * route(tree, x);
    return acc;
}

std::vector<double> GbtModel::predict(const Matrix& X) const {
    if (X.cols() != n_features)
        throw std::invalid_argument("gbt predict: expected " + std::to_string(n_features) +
                                    " features, got " + std::to_string(X.cols()));
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
    return out;
}

GbtModel fit(const Matrix& X, const std::vector<double>& y, const GbtParams& params,
             std::vector<std::string> feature_names) {
    params.validate();
    const std::size_t n = X.rows(), d = X.cols();
    if (n < 2) throw std::invalid_argument("gbt fit: need at least 2 rows");
    if (y.size() != n)
        throw std::invalid_argument("gbt fit: " + std::to_string(n) + " rows but " +
                                    std::to_string(y.size()) + " targets");
    if (d == 0) throw std::invalid_argument("gbt fit: no feature columns");
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("gbt fit: non-finite target");
    for (double v : X.data())
        if (std::isinf(v))
            throw std::invalid_argument("gbt fit: infinite feature value (use NaN for missing)");
    if (feature_names.empty()) {
        feature_names.reserve(d);
        for (std::size_t j = 0; j < d; ++j) feature_names.push_back("f" + std::to_string(j));
    }
    if (feature_names.size() != d)
        throw std::invalid_argument("gbt fit: feature name count does not match columns");

    GbtModel model;
    model.params = params;
    model.n_features = d;
    model.feature_names = std::move(feature_names);
    model.base_score = std::isnan(params.base_score)
                           ? std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n)
                           : params.base_score;

    std::vector<double> prediction(n, model.base_score);
    std::vector<double> grad(n);
    std::vector<int> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::vector<int> all_features(d);
    std::iota(all_features.begin(), all_features.end(), 0);

    model.trees.reserve(static_cast<std::size_t>(params.n_rounds));
    model.train_mse.reserve(static_cast<std::size_t>(params.n_rounds));
    for (int round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = prediction[i] - y[i];

        std::vector<int> rows = all_rows;
        if (params.subsample < 1.0) {
            Rng rng(derive_seed(params.seed, "gbt-rows", static_cast<std::uint64_t>(round)));
            rng.shuffle(rows);
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)));
            rows.resize(keep);
            std::sort(rows.begin(), rows.end());
        }
        std::vector<int> features = all_features;
        if (params.colsample < 1.0) {
            Rng rng(derive_seed(params.seed, "gbt-cols", static_cast<std::uint64_t>(round)));
            rng.shuffle(features);
            const auto keep = std::max<std::size_t>(
                1, static_cast<std::size_t>(params.colsample * static_cast<double>(d)));
            features.resize(keep);
            std::sort(features.begin(), features.end());
        }

        Tree tree = build_tree(X, grad, rows, features, params);
        for (std::size_t i = 0; i < n; ++i)
            prediction[i] += params.learning_rate * route(tree, X.row(i));
        model.trees.push_back(std::move(tree));

        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = prediction[i] - y[i];
            mse += r * r;
        }
        model.train_mse.push_back(mse / static_cast<double>(n));
    }
    return model;
}

GbtModel fit(const tabular::DesignMatrix& X, const std::vector<double>& y,
             const GbtParams& params) {
    return fit(X.values, y, params, X.feature_names);
}

std::map<std::string, double> total_gain_importance(const GbtModel& model) {
    std::map<std::string, double> scores;
    for (const auto& name : model.feature_names) scores[name] = 0.0;
    for (const Tree& tree : model.trees)
        for (const TreeNode& node : tree)
            if (!node.is_leaf)
                scores[model.feature_names[static_cast<std::size_t>(node.feature)]] += node.gain;
    return scores;
}

std::map<std::string, double> grouped_importance(
    const std::map<std::string, double>& importance,
    const std::map<std::string, std::string>& group_of) {
    std::map<std::string, double> out;
    for (const auto& [feature, score] : importance) {
        auto it = group_of.find(feature);
        if (it == group_of.end())
            throw std::invalid_argument("grouped_importance: feature '" + feature +
                                        "' has no group");
        out[it->second] += score;
    }
    return out;
}

std::map<std::string, double> grouped_importance(const std::map<std::string, double>& importance,
                                                 const tabular::DesignMatrix& design) {
    std::map<std::string, std::string> group_of;
    for (std::size_t j = 0; j < design.feature_names.size(); ++j)
        group_of[design.feature_names[j]] = design.group_of[j];
    return grouped_importance(importance, group_of);
}

namespace {

nlohmann::json node_to_json(const TreeNode& node) {
    nlohmann::json j;
    if (node.is_leaf) {
        j["leaf"] = node.weight;
        j["cover"] = node.cover;
    } else {
        j["feature"] = node.feature;
        j["threshold"] = node.threshold;
        j["left"] = node.left;
        j["right"] = node.right;
        j["default_left"] = node.default_left;
        j["gain"] = node.gain;
        j["cover"] = node.cover;
    }
    return j;
}

TreeNode node_from_json(const nlohmann::json& j) {
    TreeNode node;
    if (j.contains("leaf")) {
        node.is_leaf = true;
        node.weight = j.at("leaf").get<double>();
        node.cover = j.at("cover").get<double>();
    } else {
        node.is_leaf = false;
        node.feature = j.at("feature").get<int>();
        node.threshold = j.at("threshold").get<double>();
        node.left = j.at("left").get<int>();
        node.right = j.at("right").get<int>();
        node.default_left = j.at("default_left").get<bool>();
        node.gain = j.at("gain").get<double>();
        node.cover = j.at("cover").get<double>();
    }
    return node;
}

}  // namespace

std::string GbtModel::to_json() const {
    nlohmann::json j;
    j["base_score"] = base_score;
    j["n_features"] = n_features;
    j["feature_names"] = feature_names;
    nlohmann::json p;
    p["n_rounds"] = params.n_rounds;
    p["max_depth"] = params.max_depth;
    p["learning_rate"] = params.learning_rate;
    p["lambda"] = params.lambda;
    p["gamma"] = params.gamma;
    p["min_child_weight"] = params.min_child_weight;
    // NaN means "derive from the data"; JSON has no NaN literal, so use null.
    if (std::isnan(params.base_score))
        p["base_score"] = nullptr;
    else
        p["base_score"] = params.base_score;
    p["subsample"] = params.subsample;
    p["colsample"] = params.colsample;
    p["seed"] = params.seed;
    j["params"] = std::move(p);
    j["train_mse"] = train_mse;
    nlohmann::json jtrees = nlohmann::json::array();
    for (const Tree& tree : trees) {
        nlohmann::json jtree = nlohmann::json::array();
        for (const TreeNode& node : tree) jtree.push_back(node_to_json(node));
        jtrees.push_back(std::move(jtree));
    }
    j["trees"] = std::move(jtrees);
    return j.dump(2);
}

GbtModel GbtModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("gbt model: invalid JSON: ") + e.what());
    }
    GbtModel model;
    try {
        model.base_score = j.at("base_score").get<double>();
        model.n_features = j.at("n_features").get<std::size_t>();
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const auto& p = j.at("params");
        model.params.n_rounds = p.at("n_rounds").get<int>();
        model.params.max_depth = p.at("max_depth").get<int>();
        model.params.learning_rate = p.at("learning_rate").get<double>();
        model.params.lambda = p.at("lambda").get<double>();
        model.params.gamma = p.at("gamma").get<double>();
        model.params.min_child_weight = p.at("min_child_weight").get<double>();
        model.params.base_score = p.at("base_score").is_null()
                                      ? std::numeric_limits<double>::quiet_NaN()
                                      : p.at("base_score").get<double>();
        model.params.subsample = p.at("subsample").get<double>();
        model.params.colsample = p.at("colsample").get<double>();
        model.params.seed = p.at("seed").get<std::uint64_t>();
        model.train_mse = j.at("train_mse").get<std::vector<double>>();
        for (const auto& jtree : j.at("trees")) {
            Tree tree;
            for (const auto& jnode : jtree) tree.push_back(node_from_json(jnode));
            model.trees.push_back(std::move(tree));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("gbt model: malformed document: ") + e.what());
    }
    return model;
}

void GbtModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("gbt model: cannot open " + path.string() + " for writing");
    out << to_json() << '\n';
}

GbtModel GbtModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("gbt model: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

}  // namespace catembed::gbt
