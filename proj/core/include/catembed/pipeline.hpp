#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "catembed/embed.hpp"
#include "catembed/gbt.hpp"
#include "catembed/reduce.hpp"
#include "catembed/tabular.hpp"

namespace catembed::pipeline {

/// Per-feature encoder selection. Features without an override use the
/// encoder implied by their schema kind.
struct EncoderChoice {
    enum class Kind { OneHot, Binary, Doc2Vec, ExternalTable };
    Kind kind = Kind::OneHot;
    std::string table_path;  // ExternalTable only
};

std::string to_string(EncoderChoice::Kind kind);
EncoderChoice::Kind encoder_kind_from_string(const std::string& s);

struct ReductionSpec {
    enum class Kind { None, Pca, Umap };
    Kind kind = Kind::None;
    std::size_t pca_k = 3;
    reduce::UmapParams umap;
};

struct PipelineSpec {
    tabular::FeatureSchema schema;
    std::map<std::string, EncoderChoice> encoders;
    embed::Doc2VecParams doc2vec;  // shared by every doc2vec-encoded feature
    ReductionSpec reduction;       // applied per embedding table
    gbt::GbtParams gbt;
    /// Comparison flag: train the embedding once on the full dataset instead
    /// of per training fold. Deliberately leaky, off by default.
    bool global_embedding_fit = false;
    bool shap_per_column_mean = false;
    std::uint64_t seed = 1;
};

/// One embedding source fitted on training rows: raw vector table, optional
/// reduction stage, and the model for out-of-table inference.
struct FittedTable {
    std::string id;  // "doc2vec" or the external table path
    embed::EmbeddingTable table;
    std::optional<embed::Doc2VecModel> model;
    std::optional<reduce::PcaModel> pca;
    std::map<std::string, std::vector<double>> umap_coords;
    std::size_t out_dim = 0;

    /// Reduced (if configured) vector for a description. Unknown descriptions
    /// fall back to inference for the doc2vec source; the UMAP stage has no
    /// out-of-sample transform, so unknowns map to zeros with a warning.
    std::vector<double> vector_for(const std::string& description) const;
};

struct FittedFeature {
    enum class Mode { Numeric, OneHot, Binary, Embedded };
    std::string name;
    Mode mode = Mode::Numeric;
    std::string text_source;  // Embedded: column supplying the text
    tabular::StandardizationParams standardize;  // Numeric
    std::optional<tabular::OneHotEncoder> onehot;
    std::optional<tabular::BinaryEncoder> binary;
    std::size_t table_index = 0;  // Embedded
    std::vector<tabular::StandardizationParams> embedded_standardize;
};

struct FittedPipeline {
    PipelineSpec spec;
    // Imputation values learned from the training rows, keyed by column.
    std::map<std::string, double> numeric_fill;
    std::map<std::string, std::string> category_fill;
    std::vector<FittedTable> tables;
    std::vector<FittedFeature> features;
    gbt::GbtModel model;

    tabular::DesignMatrix transform(const tabular::Dataset& ds) const;
    std::vector<double> predict(const tabular::Dataset& ds) const;
    std::vector<double> targets(const tabular::Dataset& ds) const;

    /// Derived design-matrix column → originating feature group.
    std::map<std::string, std::string> group_of() const;
    /// Group → reporting kind tag (numeric / recipe / insert-geometry).
    std::map<std::string, std::string> group_kinds() const;

    /// Complete fitted state as JSON with bit-exact doubles; two pipelines
    /// fitted identically serialize identically.
    std::string to_json() const;
};

/// Fits every stage on `train` only. `embedding_corpus` is consulted for the
/// doc2vec text corpus when spec.global_embedding_fit is set.
FittedPipeline fit_pipeline(const PipelineSpec& spec, const tabular::Dataset& train,
                            const tabular::Dataset* embedding_corpus = nullptr);

}  // namespace catembed::pipeline
