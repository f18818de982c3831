#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "catembed/gbt.hpp"
#include "catembed/matrix.hpp"

namespace catembed::shap {

/// Per-sample additive attributions. For every sample, base_value plus the
/// row sum reproduces the model prediction.
struct ShapMatrix {
    Matrix values;  // samples x features, target units
    double base_value = 0.0;
    std::vector<std::string> feature_names;
};

/// Path-dependent TreeSHAP over the stored training covers. Missing feature
/// values follow each node's default branch, the same routing predict uses.
ShapMatrix tree_shap(const gbt::GbtModel& model, const Matrix& X);

/// Default aggregation: score(g) = mean over samples of |sum of the group's
/// member attributions|. The alternative mode averages per-column mean
/// absolute attributions instead of summing within the sample first.
std::map<std::string, double> grouped_shap(const ShapMatrix& shap,
                                           const std::map<std::string, std::string>& group_of,
                                           bool per_column_mean = false);

struct RankedGroup {
    std::string group;
    std::string kind;  // numeric | recipe | insert-geometry
    double score = 0.0;
};

/// Descending by score, ties alphabetical; top_k clamps to the group count.
std::vector<RankedGroup> rank_report(const std::map<std::string, double>& scores,
                                     const std::map<std::string, std::string>& kind_of,
                                     int top_k);

/// CSV export `group,kind,score`, rows already ranked.
void save_report(const std::vector<RankedGroup>& report, const std::filesystem::path& path);

}  // namespace catembed::shap
