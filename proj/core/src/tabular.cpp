#include "catembed/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "catembed/csv.hpp"
#include "catembed/log.hpp"

namespace catembed::tabular {

using nlohmann::json;

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::Numeric: return "numeric";
        case FeatureKind::CategoricalBinary: return "categorical_binary";
        case FeatureKind::CategoricalOnehot: return "categorical_onehot";
        case FeatureKind::CategoricalEmbedded: return "categorical_embedded";
        case FeatureKind::Target: return "target";
    }
    throw std::logic_error("unreachable feature kind");
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "numeric") return FeatureKind::Numeric;
    if (s == "categorical_binary") return FeatureKind::CategoricalBinary;
    if (s == "categorical_onehot") return FeatureKind::CategoricalOnehot;
    if (s == "categorical_embedded") return FeatureKind::CategoricalEmbedded;
    if (s == "target") return FeatureKind::Target;
    throw std::invalid_argument("unknown feature kind: " + s);
}

void FeatureSchema::validate() const {
    std::set<std::string> names;
    int targets = 0;
    for (const auto& f : features) {
        if (f.name.empty()) throw std::invalid_argument("schema: empty feature name");
        if (!names.insert(f.name).second)
            throw std::invalid_argument("schema: duplicate feature name " + f.name);
        if (f.kind == FeatureKind::Target) ++targets;
        if (f.kind == FeatureKind::CategoricalEmbedded && f.description_source.empty())
            throw std::invalid_argument("schema: embedded feature " + f.name +
                                        " needs a description_source");
    }
    if (targets != 1)
        throw std::invalid_argument("schema: exactly one target feature required, got " +
                                    std::to_string(targets));
}

const FeatureSpec& FeatureSchema::target() const {
    for (const auto& f : features)
        if (f.kind == FeatureKind::Target) return f;
    throw std::logic_error("schema has no target");
}

const FeatureSpec* FeatureSchema::find(const std::string& name) const {
    for (const auto& f : features)
        if (f.name == name) return &f;
    return nullptr;
}

std::string FeatureSchema::report_kind_of(const FeatureSpec& spec) const {
    if (!spec.report_kind.empty()) return spec.report_kind;
    if (spec.kind == FeatureKind::Numeric) return "numeric";
    if (spec.name.find("recipe") != std::string::npos) return "recipe";
    return "insert-geometry";
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("schema: cannot open " + path.string());
    json doc = json::parse(in);
    FeatureSchema schema;
    for (const auto& item : doc.at("features")) {
        FeatureSpec spec;
        spec.name = item.at("name").get<std::string>();
        spec.kind = feature_kind_from_string(item.at("kind").get<std::string>());
        if (item.contains("description_source"))
            spec.description_source = item["description_source"].get<std::string>();
        if (item.contains("report_kind"))
            spec.report_kind = item["report_kind"].get<std::string>();
        schema.features.push_back(std::move(spec));
    }
    schema.validate();
    return schema;
}

void FeatureSchema::save(const std::filesystem::path& path) const {
    validate();
    json doc;
    doc["features"] = json::array();
    for (const auto& f : features) {
        json item;
        item["name"] = f.name;
        item["kind"] = to_string(f.kind);
        if (!f.description_source.empty()) item["description_source"] = f.description_source;
        if (!f.report_kind.empty()) item["report_kind"] = f.report_kind;
        doc["features"].push_back(std::move(item));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("schema: cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

bool Column::any_missing() const {
    return std::find(missing.begin(), missing.end(), char(1)) != missing.end();
}

const Column& Dataset::column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) throw std::out_of_range("dataset: no column " + name);
    return it->second;
}

Column& Dataset::column(const std::string& name) {
    auto it = columns.find(name);
    if (it == columns.end()) throw std::out_of_range("dataset: no column " + name);
    return it->second;
}

bool Dataset::has_column(const std::string& name) const {
    return columns.count(name) != 0;
}

void Dataset::add_column(const std::string& name, Column col) {
    if (has_column(name)) throw std::invalid_argument("dataset: duplicate column " + name);
    if (!column_order.empty() && col.size() != row_count)
        throw std::invalid_argument("dataset: column " + name + " row count mismatch");
    row_count = col.size();
    column_order.push_back(name);
    columns.emplace(name, std::move(col));
}

Dataset Dataset::select_rows(std::span<const int> indices) const {
    Dataset out;
    for (const auto& name : column_order) {
        const Column& src = columns.at(name);
        Column dst;
        dst.type = src.type;
        dst.missing.reserve(indices.size());
        for (int idx : indices) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= row_count)
                throw std::out_of_range("dataset: row index out of range");
            if (src.type == Column::Type::Numeric)
                dst.numeric.push_back(src.numeric[idx]);
            else
                dst.categories.push_back(src.categories[idx]);
            dst.missing.push_back(src.missing[idx]);
        }
        out.add_column(name, std::move(dst));
    }
    out.row_count = indices.size();
    return out;
}

namespace {

bool is_missing_cell(const std::string& cell) {
    return cell.empty() || cell == "n/a" || cell == "N/A";
}

bool parse_numeric(const std::string& cell, double& out) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t') ++end;
    return *end == '\0';
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, const FeatureSchema& schema) {
    schema.validate();
    csv::Table table = csv::read_file(path);

    std::set<std::string> known;
    std::set<std::string> numeric_columns;
    for (const auto& f : schema.features) {
        known.insert(f.name);
        if (f.kind == FeatureKind::Numeric || f.kind == FeatureKind::Target)
            numeric_columns.insert(f.name);
        if (!f.description_source.empty()) known.insert(f.description_source);
    }

    std::set<std::string> seen_headers;
    for (const auto& h : table.header) {
        if (!seen_headers.insert(h).second)
            throw std::runtime_error("dataset: duplicate header " + h);
        if (!known.count(h))
            throw std::runtime_error("dataset: unknown column " + h);
    }
    for (const auto& name : known)
        if (!seen_headers.count(name))
            throw std::runtime_error("dataset: missing column " + name);

    Dataset ds;
    const std::size_t ncols = table.header.size();
    std::vector<Column> cols(ncols);
    for (std::size_t c = 0; c < ncols; ++c)
        cols[c].type = numeric_columns.count(table.header[c]) ? Column::Type::Numeric
                                                              : Column::Type::Categorical;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != ncols)
            throw std::runtime_error("dataset: row " + std::to_string(r + 1) +
                                     " has " + std::to_string(row.size()) +
                                     " fields, expected " + std::to_string(ncols));
        for (std::size_t c = 0; c < ncols; ++c) {
            Column& col = cols[c];
            const std::string& cell = row[c];
            if (col.type == Column::Type::Numeric) {
                double v = 0.0;
                if (is_missing_cell(cell) || !parse_numeric(cell, v)) {
                    col.numeric.push_back(0.0);
                    col.missing.push_back(1);
                } else {
                    col.numeric.push_back(v);
                    col.missing.push_back(0);
                }
            } else {
                if (is_missing_cell(cell)) {
                    col.categories.emplace_back();
                    col.missing.push_back(1);
                } else {
                    col.categories.push_back(cell);
                    col.missing.push_back(0);
                }
            }
        }
    }

    for (std::size_t c = 0; c < ncols; ++c)
        ds.add_column(table.header[c], std::move(cols[c]));
    ds.row_count = table.rows.size();
    return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds,
                  const FeatureSchema& schema) {
    schema.validate();
    csv::Table table;
    table.header = ds.column_order;
    table.rows.assign(ds.row_count, std::vector<std::string>(ds.column_order.size()));
    for (std::size_t c = 0; c < ds.column_order.size(); ++c) {
        const Column& col = ds.columns.at(ds.column_order[c]);
        for (std::size_t r = 0; r < ds.row_count; ++r) {
            if (col.missing[r]) {
                table.rows[r][c] = "n/a";
            } else if (col.type == Column::Type::Numeric) {
                table.rows[r][c] = csv::format_double(col.numeric[r]);
            } else {
                table.rows[r][c] = col.categories[r];
            }
        }
    }
    csv::write_file(path, table);
}

namespace {

double column_mean_value(const Column& col, const std::string& name) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < col.numeric.size(); ++i) {
        if (!col.missing[i]) {
            sum += col.numeric[i];
            ++n;
        }
    }
    if (n == 0)
        throw std::runtime_error("impute: column " + name + " is entirely missing");
    return sum / static_cast<double>(n);
}

std::string column_mode_value(const Column& col, const std::string& name) {
    // first-appearance order breaks frequency ties
    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < col.categories.size(); ++i) {
        if (col.missing[i]) continue;
        auto [it, inserted] = counts.emplace(col.categories[i], 0);
        if (inserted) order.push_back(col.categories[i]);
        ++it->second;
    }
    if (order.empty())
        throw std::runtime_error("impute: column " + name + " is entirely missing");
    std::string best = order.front();
    for (const auto& cat : order)
        if (counts[cat] > counts[best]) best = cat;
    return best;
}

}  // namespace

Dataset impute(const Dataset& ds, ImputeStrategy strategy, double constant_numeric,
               const std::string& constant_category) {
    Dataset out = ds;
    for (const auto& name : out.column_order) {
        Column& col = out.columns.at(name);
        if (!col.any_missing()) continue;
        if (col.type == Column::Type::Numeric) {
            double fill = 0.0;
            switch (strategy) {
                case ImputeStrategy::ColumnMean:
                    fill = column_mean_value(col, name);
                    break;
                case ImputeStrategy::Constant:
                    fill = constant_numeric;
                    break;
                case ImputeStrategy::ColumnMode:
                    throw std::invalid_argument(
                        "impute: column_mode is not valid for numeric column " + name);
            }
            for (std::size_t i = 0; i < col.numeric.size(); ++i)
                if (col.missing[i]) col.numeric[i] = fill;
        } else {
            std::string fill;
            switch (strategy) {
                case ImputeStrategy::ColumnMode:
                    fill = column_mode_value(col, name);
                    break;
                case ImputeStrategy::Constant:
                    fill = constant_category;
                    break;
                case ImputeStrategy::ColumnMean:
                    throw std::invalid_argument(
                        "impute: column_mean is not valid for categorical column " + name);
            }
            for (std::size_t i = 0; i < col.categories.size(); ++i)
                if (col.missing[i]) col.categories[i] = fill;
        }
        std::fill(col.missing.begin(), col.missing.end(), char(0));
    }
    return out;
}

StandardizationParams standardize_fit(std::span<const double> column) {
    if (column.empty()) throw std::invalid_argument("standardize_fit: empty column");
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(column.size());
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    var /= static_cast<double>(column.size());
    return {mean, std::sqrt(var)};
}

std::vector<double> standardize_apply(std::span<const double> column,
                                      const StandardizationParams& params) {
    std::vector<double> out(column.size());
    if (params.stddev <= 0.0) {
        // constant column: all z-scores defined as 0
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    for (std::size_t i = 0; i < column.size(); ++i)
        out[i] = (column[i] - params.mean) / params.stddev;
    return out;
}

BinaryEncoder BinaryEncoder::fit(std::span<const std::string> column) {
    BinaryEncoder enc;
    for (const auto& cat : column) {
        if (enc.code_.emplace(cat, static_cast<int>(enc.categories_.size())).second)
            enc.categories_.push_back(cat);
    }
    const std::size_t n = std::max<std::size_t>(enc.categories_.size(), 2);
    enc.bit_count_ = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n))));
    return enc;
}

std::optional<int> BinaryEncoder::code_of(const std::string& category) const {
    auto it = code_.find(category);
    if (it == code_.end()) return std::nullopt;
    return it->second;
}

int BinaryEncoder::decode(std::span<const double> bits) {
    int code = 0;
    for (double b : bits) code = code * 2 + (b != 0.0 ? 1 : 0);
    return code;
}

std::vector<std::vector<double>> BinaryEncoder::apply(
    std::span<const std::string> column) const {
    std::vector<std::vector<double>> out(bit_count_, std::vector<double>(column.size(), 0.0));
    for (std::size_t i = 0; i < column.size(); ++i) {
        auto it = code_.find(column[i]);
        if (it == code_.end()) {
            logging::warn("binary encoder: unseen category '" + column[i] +
                          "', emitting all-zero pattern");
            continue;
        }
        int code = it->second;
        for (std::size_t b = 0; b < bit_count_; ++b) {
            const std::size_t shift = bit_count_ - 1 - b;  // MSB first
            out[b][i] = static_cast<double>((code >> shift) & 1);
        }
    }
    return out;
}

OneHotEncoder OneHotEncoder::fit(std::span<const std::string> column) {
    OneHotEncoder enc;
    for (const auto& cat : column) {
        if (enc.index_.emplace(cat, static_cast<int>(enc.categories_.size())).second)
            enc.categories_.push_back(cat);
    }
    return enc;
}

std::vector<std::vector<double>> OneHotEncoder::apply(
    std::span<const std::string> column) const {
    std::vector<std::vector<double>> out(categories_.size(),
                                         std::vector<double>(column.size(), 0.0));
    for (std::size_t i = 0; i < column.size(); ++i) {
        auto it = index_.find(column[i]);
        if (it != index_.end()) out[it->second][i] = 1.0;
    }
    return out;
}

std::map<std::string, std::vector<std::size_t>> DesignMatrix::group_members() const {
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t j = 0; j < group_of.size(); ++j) members[group_of[j]].push_back(j);
    return members;
}

DesignMatrix assemble_design_matrix(std::size_t row_count,
                                    const std::vector<ColumnBlock>& blocks) {
    if (row_count == 0) throw std::invalid_argument("assemble: empty dataset");
    std::size_t total = 0;
    for (const auto& block : blocks) {
        if (block.names.size() != block.columns.size())
            throw std::invalid_argument("assemble: block " + block.group +
                                        " name/column count mismatch");
        for (const auto& col : block.columns)
            if (col.size() != row_count)
                throw std::invalid_argument("assemble: block " + block.group +
                                            " row count mismatch");
        total += block.columns.size();
    }
    if (total == 0) throw std::invalid_argument("assemble: no feature columns");

    DesignMatrix dm;
    dm.values = Matrix(row_count, total);
    dm.feature_names.reserve(total);
    dm.group_of.reserve(total);
    std::size_t j = 0;
    for (const auto& block : blocks) {
        for (std::size_t b = 0; b < block.columns.size(); ++b, ++j) {
            dm.feature_names.push_back(block.names[b]);
            dm.group_of.push_back(block.group);
            const auto& col = block.columns[b];
            for (std::size_t i = 0; i < row_count; ++i) {
                if (!std::isfinite(col[i]))
                    throw std::invalid_argument("assemble: non-finite value in " +
                                                block.names[b]);
                dm.values(i, j) = col[i];
            }
        }
    }
    return dm;
}

}  // namespace catembed::tabular
