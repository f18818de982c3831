#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "catembed/tabular.hpp"

namespace catembed::synth {

/// One insert type the generator can place on a disk. Geometry numerics are
/// decoded from the designation code, so the code must parse.
struct CatalogEntry {
    std::string code;         // designation, e.g. "CNMG1204"
    std::string description;  // short text, e.g. "rhombus shape 80 degrees"
    double unit_area = 0.0;   // mm^2 per insert
};

std::vector<CatalogEntry> default_catalog();

void save_catalog(const std::filesystem::path& path, const std::vector<CatalogEntry>& catalog);
std::vector<CatalogEntry> load_catalog(const std::filesystem::path& path);

struct SynthParams {
    std::size_t n_runs = 40;
    std::size_t disks_per_run = 8;
    /// Empty means default_catalog().
    std::vector<CatalogEntry> insert_catalog;
    double noise_std = 0.1;
    /// Scale per modeled feature group; groups absent from the map contribute
    /// nothing. Keys must name features of default_schema().
    std::map<std::string, double> effect_weights;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Weights for a dataset whose signal sits mostly in the shape semantics.
std::map<std::string, double> default_effect_weights();

/// Realized contribution scales per group, strongest first. The scale is the
/// standard deviation of the group's target contribution across rows, with
/// the single shape x count interaction split evenly between its two ends.
struct GroundTruth {
    std::vector<std::string> ranking;
    std::map<std::string, double> effect_scale;
};

struct SynthResult {
    tabular::Dataset dataset;
    GroundTruth truth;
};

/// Schema covering every generated column, target included. Fixed regardless
/// of the catalog; the three shape features embed their *_desc source columns.
tabular::FeatureSchema default_schema();

/// One row per disk. Each run draws a recipe and, per disk, a catalog entry
/// and an insert count; geometry columns come from parsing the entry code and
/// neighbor columns from the disks directly above/below in the same run
/// (missing at the stack ends). The target is
///   10 + sum_g w_g u_g + 0.5 (w_shape u_shape)(w_n_inserts u_n_inserts) + noise
/// where u is the standardized column for numeric groups and a semantic score
/// for categorical ones (rhombus family +1, filling material -1, other shapes
/// 0). Draw order: per run recipe, then per disk entry and count, then one
/// noise value per row; all from one stream, so output is a pure function of
/// params.
SynthResult generate(const SynthParams& params);

}  // namespace catembed::synth
