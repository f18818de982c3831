#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "catembed/matrix.hpp"

namespace catembed::tabular {

enum class FeatureKind {
    Numeric,
    CategoricalBinary,
    CategoricalOnehot,
    CategoricalEmbedded,
    Target,
};

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    /// For embedded categoricals: the column holding the textual description.
    std::string description_source;
    /// Reporting tag for importance bars: "numeric", "recipe" or
    /// "insert-geometry". Empty means derive from the kind and name.
    std::string report_kind;
};

struct FeatureSchema {
    std::vector<FeatureSpec> features;

    /// Throws if names collide, the target is not unique, or an embedded
    /// feature lacks a description source.
    void validate() const;

    const FeatureSpec& target() const;
    const FeatureSpec* find(const std::string& name) const;
    /// Resolved reporting tag for a feature (see FeatureSpec::report_kind).
    std::string report_kind_of(const FeatureSpec& spec) const;

    static FeatureSchema load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

/// One dataset column. Missingness is carried in an explicit mask, never as
/// a magic value inside the data itself.
struct Column {
    enum class Type { Numeric, Categorical };
    Type type = Type::Numeric;
    std::vector<double> numeric;          // valid when type == Numeric
    std::vector<std::string> categories;  // valid when type == Categorical
    std::vector<char> missing;            // 1 = missing, parallel to values

    std::size_t size() const {
        return type == Type::Numeric ? numeric.size() : categories.size();
    }
    bool any_missing() const;
};

struct Dataset {
    std::vector<std::string> column_order;
    std::unordered_map<std::string, Column> columns;
    std::size_t row_count = 0;

    const Column& column(const std::string& name) const;
    Column& column(const std::string& name);
    bool has_column(const std::string& name) const;
    void add_column(const std::string& name, Column col);

    /// Row subset in the given index order.
    Dataset select_rows(std::span<const int> indices) const;
};

/// CSV loader: header required, ',' delimiter, empty cell or "n/a" = missing.
/// Columns are typed from the schema; description-source columns load as
/// categorical. A file column the schema does not mention is an error.
Dataset load_dataset(const std::filesystem::path& path, const FeatureSchema& schema);
void save_dataset(const std::filesystem::path& path, const Dataset& ds, const FeatureSchema& schema);

enum class ImputeStrategy { ColumnMean, ColumnMode, Constant };

/// Applies the strategy to every column that has missing values.
/// ColumnMean is only valid for numeric columns.
Dataset impute(const Dataset& ds, ImputeStrategy strategy,
               double constant_numeric = 0.0,
               const std::string& constant_category = "missing");

struct StandardizationParams {
    double mean = 0.0;
    double stddev = 0.0;  // population stddev; 0 marks a constant column
};

StandardizationParams standardize_fit(std::span<const double> column);
/// Constant columns (stddev 0) map to all-zeros.
std::vector<double> standardize_apply(std::span<const double> column,
                                      const StandardizationParams& params);

/// Binary encoder: categories get integer codes in first-appearance order and
/// are emitted as ceil(log2(max(n,2))) bit columns, most significant first.
/// Unseen categories at apply time produce the all-zero pattern and a warning.
class BinaryEncoder {
public:
    static BinaryEncoder fit(std::span<const std::string> column);

    std::size_t bit_count() const { return bit_count_; }
    std::size_t category_count() const { return categories_.size(); }
    const std::vector<std::string>& categories() const { return categories_; }
    std::optional<int> code_of(const std::string& category) const;
    /// Recovers the integer code from one row of bit values.
    static int decode(std::span<const double> bits);

    /// Returns bit_count() columns of 0/1 values.
    std::vector<std::vector<double>> apply(std::span<const std::string> column) const;

private:
    std::vector<std::string> categories_;
    std::unordered_map<std::string, int> code_;
    std::size_t bit_count_ = 1;
};

/// One indicator column per seen category; unseen rows are all zero.
class OneHotEncoder {
public:
    static OneHotEncoder fit(std::span<const std::string> column);

    std::size_t category_count() const { return categories_.size(); }
    const std::vector<std::string>& categories() const { return categories_; }

    std::vector<std::vector<double>> apply(std::span<const std::string> column) const;

private:
    std::vector<std::string> categories_;
    std::unordered_map<std::string, int> index_;
};

/// A group of derived numeric columns originating from one schema feature.
struct ColumnBlock {
    std::string group;                    // originating feature name
    std::vector<std::string> names;       // derived column names
    std::vector<std::vector<double>> columns;
};

struct DesignMatrix {
    Matrix values;                        // samples x features
    std::vector<std::string> feature_names;
    std::vector<std::string> group_of;    // per feature column

    std::map<std::string, std::vector<std::size_t>> group_members() const;
};

/// Stitches blocks (already in schema order) into the final matrix.
/// Blocks must agree on row count and contain no non-finite values.
DesignMatrix assemble_design_matrix(std::size_t row_count,
                                    const std::vector<ColumnBlock>& blocks);

}  // namespace catembed::tabular
