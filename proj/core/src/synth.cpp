#include "catembed/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <set>
#include <stdexcept>

#include "catembed/csv.hpp"
#include "catembed/embed.hpp"
#include "catembed/iso.hpp"
#include "catembed/rng.hpp"

namespace catembed::synth {

namespace {

constexpr double kTargetBase = 10.0;
constexpr double kInteractionScale = 0.5;
constexpr std::size_t kNoNeighbor = static_cast<std::size_t>(-1);

const char* kRecipes[] = {"R1", "R2", "R3"};

// Names of the modeled feature groups, i.e. every schema feature except the
// target and the description columns the shape features consume.
std::vector<std::string> modeled_groups() {
    std::vector<std::string> out = {
        "n_inserts", "insert_area", "disk_position",
        "total_area", "area_std",   "nominal_actual_area_diff",
    };
    for (const char* base : {"clearance_angle", "cutting_length", "thickness",
                             "cutting_length_tolerance", "thickness_tolerance"}) {
        out.emplace_back(base);
        out.emplace_back(std::string(base) + "_above");
        out.emplace_back(std::string(base) + "_below");
    }
    out.emplace_back("recipe");
    for (const char* base : {"shape", "characteristic"}) {
        out.emplace_back(base);
        out.emplace_back(std::string(base) + "_above");
        out.emplace_back(std::string(base) + "_below");
    }
    return out;
}

void validate_catalog(const std::vector<CatalogEntry>& catalog) {
    if (catalog.empty()) throw std::invalid_argument("synth: catalog is empty");
    std::set<std::string> codes;
    for (const auto& entry : catalog) {
        if (entry.code.empty()) throw std::invalid_argument("synth: catalog entry with empty code");
        if (!codes.insert(entry.code).second)
            throw std::invalid_argument("synth: duplicate catalog code '" + entry.code + "'");
        if (entry.description.empty() || embed::preprocess(entry.description).empty())
            throw std::invalid_argument("synth: catalog entry '" + entry.code +
                                        "' lacks a tokenizable description");
        if (!std::isfinite(entry.unit_area) || entry.unit_area <= 0.0)
            throw std::invalid_argument("synth: catalog entry '" + entry.code +
                                        "' needs a positive unit area");
    }
}

// +1 for the rhombus family, -1 for filling material, 0 for the rest. This is
// the planted semantic component shared across descriptions with a common
// token, which an embedding can exploit but a per-category encoder cannot.
double semantic_score(const std::string& description) {
    for (const auto& token : embed::preprocess(description)) {
        if (token == "rhombus") return 1.0;
        if (token == "filling") return -1.0;
    }
    return 0.0;
}

// Missing entries take the present-value mean, then the series is centered
// and scaled to unit population variance. Constant series map to all zeros.
std::vector<double> unit_series(const std::vector<double>& values,
                                const std::vector<char>& missing) {
    std::vector<double> out(values.size(), 0.0);
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!missing[i]) {
            sum += values[i];
            ++present;
        }
    if (present == 0) return out;
    const double fill = sum / static_cast<double>(present);
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        mean += missing[i] ? fill : values[i];
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = (missing[i] ? fill : values[i]) - mean;
        var += v * v;
    }
    var /= static_cast<double>(values.size());
    if (var <= 0.0) return out;
    const double scale = std::sqrt(var);
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = ((missing[i] ? fill : values[i]) - mean) / scale;
    return out;
}

double population_stddev(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(values.size()));
}

}  // namespace

std::vector<CatalogEntry> default_catalog() {
    return {
        {"VNMG1604", "rhombus shape 35 degrees", 58.0},
        {"DNMG1504", "rhombus shape 55 degrees", 66.0},
        {"CNMG1204", "rhombus shape 80 degrees", 74.0},
        {"MNMG1504", "rhombus shape 85 degrees", 81.0},
        {"TNMG1604", "triangular shape", 88.0},
        {"RCMT1204", "circular shape", 113.0},
        {"SNMG1204", "square shape", 96.0},
        {"LNMG1204", "rectangular shape", 104.0},
        {"WNMG0804", "rounded triangular shape", 49.0},
        {"HNMG0904", "hexagonal shape", 120.0},
        {"FILL0000", "filling material", 25.0},
        {"XNMG1204", "unknown shape", 71.0},
    };
}

void save_catalog(const std::filesystem::path& path, const std::vector<CatalogEntry>& catalog) {
    validate_catalog(catalog);
    csv::Table table;
    table.header = {"code", "description", "unit_area"};
    for (const auto& entry : catalog)
        table.rows.push_back({entry.code, entry.description, csv::format_double(entry.unit_area)});
    csv::write_file(path, table);
}

std::vector<CatalogEntry> load_catalog(const std::filesystem::path& path) {
    const csv::Table table = csv::read_file(path);
    if (table.header != std::vector<std::string>{"code", "description", "unit_area"})
        throw std::runtime_error("catalog: expected header code,description,unit_area in " +
                                 path.string());
    std::vector<CatalogEntry> catalog;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != 3)
            throw std::runtime_error("catalog: row " + std::to_string(i + 2) + " has " +
                                     std::to_string(row.size()) + " fields, expected 3");
        CatalogEntry entry;
        entry.code = row[0];
        entry.description = row[1];
        char* end = nullptr;
        entry.unit_area = std::strtod(row[2].c_str(), &end);
        if (end == row[2].c_str() || *end != '\0' || !std::isfinite(entry.unit_area))
            throw std::runtime_error("catalog: bad unit_area '" + row[2] + "' in row " +
                                     std::to_string(i + 2));
        catalog.push_back(std::move(entry));
    }
    validate_catalog(catalog);
    return catalog;
}

void SynthParams::validate() const {
    if (n_runs < 1) throw std::invalid_argument("synth: n_runs must be at least 1");
    if (disks_per_run < 1) throw std::invalid_argument("synth: disks_per_run must be at least 1");
    if (!std::isfinite(noise_std) || noise_std < 0.0)
        throw std::invalid_argument("synth: noise_std must be finite and non-negative");
    if (!insert_catalog.empty()) validate_catalog(insert_catalog);
    const std::vector<std::string> groups = modeled_groups();
    for (const auto& [group, weight] : effect_weights) {
        if (std::find(groups.begin(), groups.end(), group) == groups.end())
            throw std::invalid_argument("synth: effect weight for unknown group '" + group + "'");
        if (!std::isfinite(weight))
            throw std::invalid_argument("synth: effect weight for '" + group + "' is not finite");
    }
}

std::map<std::string, double> default_effect_weights() {
    return {
        {"shape", 1.0},       {"shape_above", 0.4}, {"shape_below", 0.4},
        {"recipe", 0.3},      {"n_inserts", 0.5},   {"total_area", 0.3},
        {"cutting_length", 0.2},
    };
}

tabular::FeatureSchema default_schema() {
    tabular::FeatureSchema schema;
    auto push = [&](const std::string& name, tabular::FeatureKind kind,
                    const std::string& source = "", const std::string& report = "") {
        tabular::FeatureSpec spec;
        spec.name = name;
        spec.kind = kind;
        spec.description_source = source;
        spec.report_kind = report;
        schema.features.push_back(std::move(spec));
    };
    using K = tabular::FeatureKind;
    push("n_inserts", K::Numeric);
    push("insert_area", K::Numeric);
    push("disk_position", K::Numeric);
    push("total_area", K::Numeric);
    push("area_std", K::Numeric);
    push("nominal_actual_area_diff", K::Numeric);
    for (const char* base : {"clearance_angle", "cutting_length", "thickness",
                             "cutting_length_tolerance", "thickness_tolerance"}) {
        push(base, K::Numeric, "", "insert-geometry");
        push(std::string(base) + "_above", K::Numeric, "", "insert-geometry");
        push(std::string(base) + "_below", K::Numeric, "", "insert-geometry");
    }
    push("recipe", K::CategoricalBinary, "", "recipe");
    push("shape", K::CategoricalEmbedded, "shape_desc");
    push("shape_above", K::CategoricalEmbedded, "shape_desc_above");
    push("shape_below", K::CategoricalEmbedded, "shape_desc_below");
    push("shape_desc", K::CategoricalOnehot);
    push("shape_desc_above", K::CategoricalOnehot);
    push("shape_desc_below", K::CategoricalOnehot);
    push("characteristic", K::CategoricalBinary);
    push("characteristic_above", K::CategoricalBinary);
    push("characteristic_below", K::CategoricalBinary);
    push("coating_thickness", K::Target);
    schema.validate();
    return schema;
}

SynthResult generate(const SynthParams& params) {
    params.validate();
    const std::vector<CatalogEntry> catalog =
        params.insert_catalog.empty() ? default_catalog() : params.insert_catalog;
    validate_catalog(catalog);

    const iso::IsoCodeTable code_table = iso::IsoCodeTable::builtin_default();
    std::vector<iso::InsertFeatures> geometry;
    geometry.reserve(catalog.size());
    for (const auto& entry : catalog) geometry.push_back(iso::parse_iso(entry.code, code_table));

    const std::size_t runs = params.n_runs;
    const std::size_t disks = params.disks_per_run;
    const std::size_t rows = runs * disks;

    // Structure draws first, one noise draw per row afterwards, so the same
    // seed yields the same structure regardless of noise_std.
    Rng rng(derive_seed(params.seed, "synth"));
    std::vector<std::size_t> recipe_of_run(runs);
    std::vector<std::size_t> entry_of_row(rows);
    std::vector<double> count_of_row(rows);
    for (std::size_t r = 0; r < runs; ++r) {
        recipe_of_run[r] = static_cast<std::size_t>(rng.below(3));
        for (std::size_t d = 0; d < disks; ++d) {
            const std::size_t i = r * disks + d;
            entry_of_row[i] = static_cast<std::size_t>(rng.below(catalog.size()));
            count_of_row[i] = static_cast<double>(24 + rng.below(33));
        }
    }

    // Neighbor row indices inside the same stack; the ends have none.
    std::vector<std::size_t> above_of_row(rows, kNoNeighbor);
    std::vector<std::size_t> below_of_row(rows, kNoNeighbor);
    for (std::size_t r = 0; r < runs; ++r)
        for (std::size_t d = 0; d < disks; ++d) {
            const std::size_t i = r * disks + d;
            if (d + 1 < disks) above_of_row[i] = i + 1;
            if (d > 0) below_of_row[i] = i - 1;
        }

    double catalog_area_mean = 0.0;
    for (const auto& entry : catalog) catalog_area_mean += entry.unit_area;
    catalog_area_mean /= static_cast<double>(catalog.size());

    std::vector<double> total_of_run(runs, 0.0), area_std_of_run(runs, 0.0);
    for (std::size_t r = 0; r < runs; ++r) {
        std::vector<double> disk_areas(disks);
        for (std::size_t d = 0; d < disks; ++d) {
            const std::size_t i = r * disks + d;
            disk_areas[d] = catalog[entry_of_row[i]].unit_area;
            total_of_run[r] += count_of_row[i] * disk_areas[d];
        }
        area_std_of_run[r] = population_stddev(disk_areas);
    }

    tabular::Dataset ds;
    auto add_numeric = [&](const std::string& name, auto&& value_of) {
        tabular::Column col;
        col.type = tabular::Column::Type::Numeric;
        col.numeric.resize(rows, 0.0);
        col.missing.resize(rows, 0);
        for (std::size_t i = 0; i < rows; ++i) {
            const std::optional<double> v = value_of(i);
            if (v)
                col.numeric[i] = *v;
            else
                col.missing[i] = 1;
        }
        ds.add_column(name, std::move(col));
    };
    auto add_categorical = [&](const std::string& name, auto&& value_of) {
        tabular::Column col;
        col.type = tabular::Column::Type::Categorical;
        col.categories.resize(rows);
        col.missing.resize(rows, 0);
        for (std::size_t i = 0; i < rows; ++i) {
            const std::optional<std::string> v = value_of(i);
            if (v)
                col.categories[i] = *v;
            else
                col.missing[i] = 1;
        }
        ds.add_column(name, std::move(col));
    };

    auto opt = [](double v) { return std::optional<double>(v); };
    add_numeric("n_inserts", [&](std::size_t i) { return opt(count_of_row[i]); });
    add_numeric("insert_area",
                [&](std::size_t i) { return opt(catalog[entry_of_row[i]].unit_area); });
    add_numeric("disk_position",
                [&](std::size_t i) { return opt(static_cast<double>(i % disks + 1)); });
    add_numeric("total_area", [&](std::size_t i) { return opt(total_of_run[i / disks]); });
    add_numeric("area_std", [&](std::size_t i) { return opt(area_std_of_run[i / disks]); });
    // Each recipe carries its own nominal loading of the reactor; the column
    // is the shortfall of the actual total area against that nominal.
    const double reference_total =
        static_cast<double>(disks) * 40.0 * catalog_area_mean;
    add_numeric("nominal_actual_area_diff", [&](std::size_t i) {
        const std::size_t r = i / disks;
        const double nominal = (0.9 + 0.1 * static_cast<double>(recipe_of_run[r])) * reference_total;
        return opt(nominal - total_of_run[r]);
    });

    auto geom_field = [&](std::size_t row, auto member) -> std::optional<double> {
        return geometry[entry_of_row[row]].*member;
    };
    auto neighbor_field = [&](const std::vector<std::size_t>& neighbor, std::size_t row,
                              auto member) -> std::optional<double> {
        if (neighbor[row] == kNoNeighbor) return std::nullopt;
        return geometry[entry_of_row[neighbor[row]]].*member;
    };
    auto push_geometry = [&](const std::string& base, auto member) {
        add_numeric(base, [&](std::size_t i) { return geom_field(i, member); });
        add_numeric(base + "_above",
                    [&](std::size_t i) { return neighbor_field(above_of_row, i, member); });
        add_numeric(base + "_below",
                    [&](std::size_t i) { return neighbor_field(below_of_row, i, member); });
    };
    push_geometry("clearance_angle", &iso::InsertFeatures::clearance_angle);
    push_geometry("cutting_length", &iso::InsertFeatures::cutting_length);
    push_geometry("thickness", &iso::InsertFeatures::thickness);
    push_geometry("cutting_length_tolerance", &iso::InsertFeatures::cutting_length_tolerance);
    push_geometry("thickness_tolerance", &iso::InsertFeatures::thickness_tolerance);

    add_categorical("recipe", [&](std::size_t i) {
        return std::optional<std::string>(kRecipes[recipe_of_run[i / disks]]);
    });

    auto shape_letter = [&](std::size_t row) -> std::optional<std::string> {
        return std::string(1, catalog[entry_of_row[row]].code[0]);
    };
    auto neighbor_shape = [&](const std::vector<std::size_t>& neighbor,
                              std::size_t row) -> std::optional<std::string> {
        if (neighbor[row] == kNoNeighbor) return std::nullopt;
        return shape_letter(neighbor[row]);
    };
    add_categorical("shape", [&](std::size_t i) { return shape_letter(i); });
    add_categorical("shape_above", [&](std::size_t i) { return neighbor_shape(above_of_row, i); });
    add_categorical("shape_below", [&](std::size_t i) { return neighbor_shape(below_of_row, i); });

    auto description_of = [&](std::size_t row) -> std::optional<std::string> {
        return catalog[entry_of_row[row]].description;
    };
    add_categorical("shape_desc", [&](std::size_t i) { return description_of(i); });
    add_categorical("shape_desc_above", [&](std::size_t i) -> std::optional<std::string> {
        if (above_of_row[i] == kNoNeighbor) return std::nullopt;
        return description_of(above_of_row[i]);
    });
    add_categorical("shape_desc_below", [&](std::size_t i) -> std::optional<std::string> {
        if (below_of_row[i] == kNoNeighbor) return std::nullopt;
        return description_of(below_of_row[i]);
    });

    auto characteristic_of = [&](std::size_t row) -> std::optional<std::string> {
        return geometry[entry_of_row[row]].characteristic;
    };
    add_categorical("characteristic", [&](std::size_t i) { return characteristic_of(i); });
    add_categorical("characteristic_above", [&](std::size_t i) -> std::optional<std::string> {
        if (above_of_row[i] == kNoNeighbor) return std::nullopt;
        return characteristic_of(above_of_row[i]);
    });
    add_categorical("characteristic_below", [&](std::size_t i) -> std::optional<std::string> {
        if (below_of_row[i] == kNoNeighbor) return std::nullopt;
        return characteristic_of(below_of_row[i]);
    });

    // Per-group target contributions. Numeric groups contribute their
    // standardized column, so a weight is also the contribution's stddev;
    // categorical groups contribute a bounded score.
    auto weight_of = [&](const std::string& group) {
        auto it = params.effect_weights.find(group);
        return it == params.effect_weights.end() ? 0.0 : it->second;
    };
    std::map<std::string, std::vector<double>> contribution;
    for (const std::string& group : modeled_groups()) {
        std::vector<double> series(rows, 0.0);
        const double w = weight_of(group);
        const tabular::Column& col = ds.column(group);
        if (col.type == tabular::Column::Type::Numeric) {
            if (w != 0.0) {
                const std::vector<double> u = unit_series(col.numeric, col.missing);
                for (std::size_t i = 0; i < rows; ++i) series[i] = w * u[i];
            }
        } else if (group == "recipe") {
            for (std::size_t i = 0; i < rows; ++i)
                series[i] = w * (static_cast<double>(recipe_of_run[i / disks]) - 1.0);
        } else if (group.rfind("shape", 0) == 0) {
            const tabular::Column& desc = ds.column("shape_desc" + group.substr(5));
            for (std::size_t i = 0; i < rows; ++i)
                if (!desc.missing[i]) series[i] = w * semantic_score(desc.categories[i]);
        } else {
            // Characteristic score keys off the designation letter 'T'.
            const std::vector<std::size_t>* neighbor =
                group == "characteristic_above"
                    ? &above_of_row
                    : (group == "characteristic_below" ? &below_of_row : nullptr);
            for (std::size_t i = 0; i < rows; ++i) {
                std::size_t row = i;
                if (neighbor) {
                    if ((*neighbor)[i] == kNoNeighbor) continue;
                    row = (*neighbor)[i];
                }
                const std::string& code = catalog[entry_of_row[row]].code;
                if (code.size() > 3 && code[3] == 'T') series[i] = w;
            }
        }
        contribution.emplace(group, std::move(series));
    }

    // Single pairwise interaction between the shape and count groups, split
    // evenly between the two for the ground-truth scales.
    {
        const std::vector<double>& shape_series = contribution.at("shape");
        const std::vector<double>& count_series = contribution.at("n_inserts");
        std::vector<double> half(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i)
            half[i] = 0.5 * kInteractionScale * shape_series[i] * count_series[i];
        for (std::size_t i = 0; i < rows; ++i) {
            contribution.at("shape")[i] += half[i];
            contribution.at("n_inserts")[i] += half[i];
        }
    }

    tabular::Column target;
    target.type = tabular::Column::Type::Numeric;
    target.numeric.resize(rows, kTargetBase);
    target.missing.resize(rows, 0);
    for (const auto& [group, series] : contribution)
        for (std::size_t i = 0; i < rows; ++i) target.numeric[i] += series[i];
    for (std::size_t i = 0; i < rows; ++i)
        target.numeric[i] += rng.normal(0.0, params.noise_std);
    ds.add_column("coating_thickness", std::move(target));

    GroundTruth truth;
    for (const auto& [group, series] : contribution)
        truth.effect_scale[group] = population_stddev(series);
    for (const auto& [group, scale] : truth.effect_scale)
        if (scale > 1e-12) truth.ranking.push_back(group);
    std::stable_sort(truth.ranking.begin(), truth.ranking.end(),
                     [&](const std::string& a, const std::string& b) {
                         const double sa = truth.effect_scale.at(a);
                         const double sb = truth.effect_scale.at(b);
                         if (sa != sb) return sa > sb;
                         return a < b;
                     });

    return {std::move(ds), std::move(truth)};
}

}  // namespace catembed::synth
