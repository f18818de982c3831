#include "catembed/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "catembed/log.hpp"
#include "catembed/rng.hpp"

namespace catembed::pipeline {

std::string to_string(EncoderChoice::Kind kind) {
    switch (kind) {
        case EncoderChoice::Kind::OneHot: return "onehot";
        case EncoderChoice::Kind::Binary: return "binary";
        case EncoderChoice::Kind::Doc2Vec: return "doc2vec";
        case EncoderChoice::Kind::ExternalTable: return "external";
    }
    return "onehot";
}

EncoderChoice::Kind encoder_kind_from_string(const std::string& s) {
    if (s == "onehot") return EncoderChoice::Kind::OneHot;
    if (s == "binary") return EncoderChoice::Kind::Binary;
    if (s == "doc2vec") return EncoderChoice::Kind::Doc2Vec;
    if (s == "external") return EncoderChoice::Kind::ExternalTable;
    throw std::invalid_argument("unknown encoder kind '" + s + "'");
}

namespace {

EncoderChoice default_choice(const tabular::FeatureSpec& feature) {
    EncoderChoice choice;
    switch (feature.kind) {
        case tabular::FeatureKind::CategoricalBinary:
            choice.kind = EncoderChoice::Kind::Binary;
            break;
        case tabular::FeatureKind::CategoricalOnehot:
            choice.kind = EncoderChoice::Kind::OneHot;
            break;
        case tabular::FeatureKind::CategoricalEmbedded:
            choice.kind = EncoderChoice::Kind::Doc2Vec;
            break;
        default:
            break;
    }
    return choice;
}

bool is_categorical(tabular::FeatureKind kind) {
    return kind == tabular::FeatureKind::CategoricalBinary ||
           kind == tabular::FeatureKind::CategoricalOnehot ||
           kind == tabular::FeatureKind::CategoricalEmbedded;
}

// The column a text-encoding feature reads its descriptions from: the
// declared source when present, otherwise the feature's own category values.
std::string text_source_of(const tabular::FeatureSpec& feature) {
    return feature.description_source.empty() ? feature.name : feature.description_source;
}

// Columns named as a description_source are consumed by the features that
// reference them and are never modeled as standalone features.
std::set<std::string> description_source_names(const tabular::FeatureSchema& schema) {
    std::set<std::string> out;
    for (const auto& feature : schema.features)
        if (!feature.description_source.empty() &&
            feature.description_source != feature.name)
            out.insert(feature.description_source);
    return out;
}

std::vector<double> filled_numeric(const tabular::Dataset& ds, const std::string& name,
                                   const std::map<std::string, double>& fills) {
    const tabular::Column& col = ds.column(name);
    if (col.type != tabular::Column::Type::Numeric)
        throw std::invalid_argument("pipeline: column '" + name + "' is not numeric");
    std::vector<double> out = col.numeric;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (col.missing[i]) out[i] = fills.at(name);
    return out;
}

std::vector<std::string> filled_categories(const tabular::Dataset& ds, const std::string& name,
                                           const std::map<std::string, std::string>& fills) {
    const tabular::Column& col = ds.column(name);
    if (col.type != tabular::Column::Type::Categorical)
        throw std::invalid_argument("pipeline: column '" + name + "' is not categorical");
    std::vector<std::string> out = col.categories;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (col.missing[i]) out[i] = fills.at(name);
    return out;
}

}  // namespace

std::vector<double> FittedTable::vector_for(const std::string& description) const {
    if (!umap_coords.empty()) {
        auto it = umap_coords.find(description);
        if (it != umap_coords.end()) return it->second;
        logging::warn("pipeline: description '" + description +
                      "' unseen by the UMAP stage, using zero vector");
        return std::vector<double>(out_dim, 0.0);
    }

    std::vector<double> raw;
    const auto idx = table.index_of(description);
    if (idx) {
        auto row = table.vector_of(*idx);
        raw.assign(row.begin(), row.end());
    } else if (model) {
        raw = embed::infer_vector(*model, embed::preprocess(description));
    } else {
        throw std::runtime_error("pipeline: description '" + description +
                                 "' missing from embedding table " + id);
    }

    if (pca) {
        Matrix one(1, raw.size());
        for (std::size_t j = 0; j < raw.size(); ++j) one(0, j) = raw[j];
        const Matrix reduced = reduce::pca_transform(*pca, one);
        return std::vector<double>(reduced.row(0).begin(), reduced.row(0).end());
    }
    return raw;
}

tabular::DesignMatrix FittedPipeline::transform(const tabular::Dataset& ds) const {
    std::vector<tabular::ColumnBlock> blocks;
    blocks.reserve(features.size());
    for (const FittedFeature& feature : features) {
        tabular::ColumnBlock block;
        block.group = feature.name;
        switch (feature.mode) {
            case FittedFeature::Mode::Numeric: {
                block.names.push_back(feature.name);
                block.columns.push_back(tabular::standardize_apply(
                    filled_numeric(ds, feature.name, numeric_fill), feature.standardize));
                break;
            }
            case FittedFeature::Mode::OneHot: {
                const auto cats = filled_categories(ds, feature.name, category_fill);
                block.columns = feature.onehot->apply(cats);
                for (const auto& category : feature.onehot->categories())
                    block.names.push_back(feature.name + "=" + category);
                break;
            }
            case FittedFeature::Mode::Binary: {
                const auto cats = filled_categories(ds, feature.name, category_fill);
                block.columns = feature.binary->apply(cats);
                for (std::size_t b = 0; b < feature.binary->bit_count(); ++b)
                    block.names.push_back(feature.name + "_b" + std::to_string(b));
                break;
            }
            case FittedFeature::Mode::Embedded: {
                const auto texts = filled_categories(ds, feature.text_source, category_fill);
                const FittedTable& source = tables[feature.table_index];
                block.columns.assign(source.out_dim, std::vector<double>(texts.size(), 0.0));
                for (std::size_t i = 0; i < texts.size(); ++i) {
                    const std::vector<double> vec = source.vector_for(texts[i]);
                    for (std::size_t j = 0; j < source.out_dim; ++j) block.columns[j][i] = vec[j];
                }
                for (std::size_t j = 0; j < source.out_dim; ++j) {
                    block.columns[j] = tabular::standardize_apply(block.columns[j],
                                                                  feature.embedded_standardize[j]);
                    block.names.push_back(feature.name + "_d" + std::to_string(j));
                }
                break;
            }
        }
        blocks.push_back(std::move(block));
    }
    return tabular::assemble_design_matrix(ds.row_count, blocks);
}

std::vector<double> FittedPipeline::predict(const tabular::Dataset& ds) const {
    return model.predict(transform(ds).values);
}

std::vector<double> FittedPipeline::targets(const tabular::Dataset& ds) const {
    const std::string& name = spec.schema.target().name;
    const tabular::Column& col = ds.column(name);
    if (col.type != tabular::Column::Type::Numeric)
        throw std::invalid_argument("pipeline: target column '" + name + "' is not numeric");
    if (col.any_missing())
        throw std::invalid_argument("pipeline: target column '" + name + "' has missing values");
    return col.numeric;
}

std::map<std::string, std::string> FittedPipeline::group_of() const {
    // Built from the fitted features so the grouping never depends on
    // parsing derived column names back apart.
    std::map<std::string, std::string> out;
    for (const FittedFeature& feature : features) {
        switch (feature.mode) {
            case FittedFeature::Mode::Numeric:
                out[feature.name] = feature.name;
                break;
            case FittedFeature::Mode::OneHot:
                for (const auto& category : feature.onehot->categories())
                    out[feature.name + "=" + category] = feature.name;
                break;
            case FittedFeature::Mode::Binary:
                for (std::size_t b = 0; b < feature.binary->bit_count(); ++b)
                    out[feature.name + "_b" + std::to_string(b)] = feature.name;
                break;
            case FittedFeature::Mode::Embedded:
                for (std::size_t j = 0; j < tables[feature.table_index].out_dim; ++j)
                    out[feature.name + "_d" + std::to_string(j)] = feature.name;
                break;
        }
    }
    return out;
}

std::map<std::string, std::string> FittedPipeline::group_kinds() const {
    const std::set<std::string> consumed = description_source_names(spec.schema);
    std::map<std::string, std::string> out;
    for (const auto& feature : spec.schema.features) {
        if (feature.kind == tabular::FeatureKind::Target) continue;
        if (consumed.count(feature.name)) continue;
        out[feature.name] = spec.schema.report_kind_of(feature);
    }
    return out;
}

FittedPipeline fit_pipeline(const PipelineSpec& spec, const tabular::Dataset& train,
                            const tabular::Dataset* embedding_corpus) {
    spec.schema.validate();
    if (train.row_count < 2) throw std::invalid_argument("pipeline: need at least 2 training rows");
    for (const auto& [name, choice] : spec.encoders) {
        const tabular::FeatureSpec* feature = spec.schema.find(name);
        if (!feature) throw std::invalid_argument("pipeline: encoder override for unknown feature '" +
                                                  name + "'");
        if (!is_categorical(feature->kind))
            throw std::invalid_argument("pipeline: encoder override on non-categorical feature '" +
                                        name + "'");
    }

    FittedPipeline fitted;
    fitted.spec = spec;

    // Imputation values come from the training rows for every column the
    // pipeline reads, so later folds cannot see test data through fills.
    auto fit_fills = [&](const std::string& name) {
        const tabular::Column& col = train.column(name);
        if (col.type == tabular::Column::Type::Numeric) {
            if (fitted.numeric_fill.count(name)) return;
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t i = 0; i < col.numeric.size(); ++i)
                if (!col.missing[i]) {
                    sum += col.numeric[i];
                    ++n;
                }
            if (n == 0)
                throw std::invalid_argument("pipeline: column '" + name +
                                            "' is entirely missing in the training rows");
            fitted.numeric_fill[name] = sum / static_cast<double>(n);
        } else {
            if (fitted.category_fill.count(name)) return;
            // Mode with first-appearance tie-break, matching the impute op.
            std::map<std::string, std::size_t> counts;
            std::vector<std::string> appearance;
            for (std::size_t i = 0; i < col.categories.size(); ++i) {
                if (col.missing[i]) continue;
                auto [it, inserted] = counts.emplace(col.categories[i], 0);
                if (inserted) appearance.push_back(col.categories[i]);
                ++it->second;
            }
            if (appearance.empty())
                throw std::invalid_argument("pipeline: column '" + name +
                                            "' is entirely missing in the training rows");
            std::string best = appearance.front();
            for (const auto& cat : appearance)
                if (counts[cat] > counts[best]) best = cat;
            fitted.category_fill[name] = best;
        }
    };

    struct Plan {
        const tabular::FeatureSpec* feature;
        EncoderChoice choice;
        std::string text_source;
    };
    std::vector<Plan> plans;
    const std::set<std::string> consumed_sources = description_source_names(spec.schema);
    for (const auto& feature : spec.schema.features) {
        if (feature.kind == tabular::FeatureKind::Target) continue;
        if (consumed_sources.count(feature.name)) continue;
        if (!train.has_column(feature.name))
            throw std::invalid_argument("pipeline: dataset lacks column '" + feature.name + "'");
        Plan plan;
        plan.feature = &feature;
        auto it = spec.encoders.find(feature.name);
        plan.choice = it != spec.encoders.end() ? it->second : default_choice(feature);
        if (plan.choice.kind == EncoderChoice::Kind::Doc2Vec ||
            plan.choice.kind == EncoderChoice::Kind::ExternalTable) {
            plan.text_source = text_source_of(feature);
            if (!train.has_column(plan.text_source))
                throw std::invalid_argument("pipeline: dataset lacks description column '" +
                                            plan.text_source + "'");
            fit_fills(plan.text_source);
        }
        fit_fills(feature.name);
        plans.push_back(plan);
    }

    // One shared doc2vec corpus: unique texts in first-appearance order over
    // all doc2vec-encoded features. The override corpus exists only for the
    // deliberately leaky global-fit comparison.
    std::vector<std::string> corpus_texts;
    std::set<std::string> corpus_seen;
    const tabular::Dataset& corpus_source =
        (spec.global_embedding_fit && embedding_corpus) ? *embedding_corpus : train;
    for (const Plan& plan : plans) {
        if (plan.choice.kind != EncoderChoice::Kind::Doc2Vec) continue;
        const tabular::Column& col = corpus_source.column(plan.text_source);
        for (std::size_t i = 0; i < col.categories.size(); ++i) {
            if (col.missing[i]) continue;
            if (corpus_seen.insert(col.categories[i]).second)
                corpus_texts.push_back(col.categories[i]);
        }
    }

    std::map<std::string, std::size_t> table_index_by_id;
    auto ensure_table = [&](const Plan& plan) -> std::size_t {
        const std::string id = plan.choice.kind == EncoderChoice::Kind::Doc2Vec
                                   ? std::string("doc2vec")
                                   : plan.choice.table_path;
        auto it = table_index_by_id.find(id);
        if (it != table_index_by_id.end()) return it->second;

        FittedTable table;
        table.id = id;
        if (plan.choice.kind == EncoderChoice::Kind::Doc2Vec) {
            embed::Corpus corpus;
            for (const auto& text : corpus_texts)
                corpus.documents.push_back({text, embed::preprocess(text)});
            embed::Doc2VecParams params = spec.doc2vec;
            params.seed = derive_seed(spec.seed, "pipeline-doc2vec");
            table.model = embed::train_doc2vec(corpus, params);
            table.table = embed::EmbeddingTable::from_doc2vec(*table.model, "doc2vec");
        } else {
            if (plan.choice.table_path.empty())
                throw std::invalid_argument("pipeline: external encoder for '" +
                                            plan.feature->name + "' lacks a table path");
            table.table = embed::EmbeddingTable::load(plan.choice.table_path);
        }
        table.out_dim = table.table.dimension;

        if (spec.reduction.kind != ReductionSpec::Kind::None) {
            // The reduction is fitted on the vectors of descriptions the
            // training rows actually use, one row per unique description.
            std::vector<std::string> used;
            std::set<std::string> used_seen;
            for (const Plan& p : plans) {
                if (p.choice.kind != plan.choice.kind) continue;
                const std::string pid = p.choice.kind == EncoderChoice::Kind::Doc2Vec
                                            ? std::string("doc2vec")
                                            : p.choice.table_path;
                if (pid != id) continue;
                const tabular::Column& col = train.column(p.text_source);
                for (std::size_t i = 0; i < col.categories.size(); ++i) {
                    const std::string& text =
                        col.missing[i] ? fitted.category_fill.at(p.text_source) : col.categories[i];
                    if (used_seen.insert(text).second) used.push_back(text);
                }
            }
            Matrix raw(used.size(), table.table.dimension);
            for (std::size_t i = 0; i < used.size(); ++i) {
                const auto idx = table.table.index_of(used[i]);
                std::vector<double> vec;
                if (idx) {
                    auto row = table.table.vector_of(*idx);
                    vec.assign(row.begin(), row.end());
                } else if (table.model) {
                    vec = embed::infer_vector(*table.model, embed::preprocess(used[i]));
                } else {
                    throw std::runtime_error("pipeline: description '" + used[i] +
                                             "' missing from embedding table " + id);
                }
                for (std::size_t j = 0; j < vec.size(); ++j) raw(i, j) = vec[j];
            }
            if (spec.reduction.kind == ReductionSpec::Kind::Pca) {
                table.pca = reduce::pca_fit(raw, spec.reduction.pca_k);
                table.out_dim = spec.reduction.pca_k;
            } else {
                reduce::UmapParams uparams = spec.reduction.umap;
                uparams.seed = derive_seed(spec.seed, "pipeline-umap",
                                           static_cast<std::uint64_t>(table_index_by_id.size()));
                const Matrix coords = reduce::umap_fit_transform(raw, uparams);
                for (std::size_t i = 0; i < used.size(); ++i)
                    table.umap_coords[used[i]] =
                        std::vector<double>(coords.row(i).begin(), coords.row(i).end());
                table.out_dim = uparams.target_dim;
            }
        }

        fitted.tables.push_back(std::move(table));
        table_index_by_id[id] = fitted.tables.size() - 1;
        return fitted.tables.size() - 1;
    };

    for (const Plan& plan : plans) {
        FittedFeature feature;
        feature.name = plan.feature->name;
        if (plan.feature->kind == tabular::FeatureKind::Numeric) {
            feature.mode = FittedFeature::Mode::Numeric;
            feature.standardize = tabular::standardize_fit(
                filled_numeric(train, feature.name, fitted.numeric_fill));
        } else {
            switch (plan.choice.kind) {
                case EncoderChoice::Kind::OneHot: {
                    feature.mode = FittedFeature::Mode::OneHot;
                    feature.onehot = tabular::OneHotEncoder::fit(
                        filled_categories(train, feature.name, fitted.category_fill));
                    break;
                }
                case EncoderChoice::Kind::Binary: {
                    feature.mode = FittedFeature::Mode::Binary;
                    feature.binary = tabular::BinaryEncoder::fit(
                        filled_categories(train, feature.name, fitted.category_fill));
                    break;
                }
                case EncoderChoice::Kind::Doc2Vec:
                case EncoderChoice::Kind::ExternalTable: {
                    feature.mode = FittedFeature::Mode::Embedded;
                    feature.text_source = plan.text_source;
                    feature.table_index = ensure_table(plan);
                    break;
                }
            }
        }
        fitted.features.push_back(std::move(feature));
    }

    // Embedded outputs are standardized like any other numeric column, with
    // parameters from the training rows.
    for (FittedFeature& feature : fitted.features) {
        if (feature.mode != FittedFeature::Mode::Embedded) continue;
        const auto texts = filled_categories(train, feature.text_source, fitted.category_fill);
        const FittedTable& source = fitted.tables[feature.table_index];
        std::vector<std::vector<double>> columns(source.out_dim,
                                                 std::vector<double>(texts.size(), 0.0));
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const std::vector<double> vec = source.vector_for(texts[i]);
            for (std::size_t j = 0; j < source.out_dim; ++j) columns[j][i] = vec[j];
        }
        feature.embedded_standardize.resize(source.out_dim);
        for (std::size_t j = 0; j < source.out_dim; ++j)
            feature.embedded_standardize[j] = tabular::standardize_fit(columns[j]);
    }

    const tabular::DesignMatrix design = fitted.transform(train);
    gbt::GbtParams gbt_params = spec.gbt;
    gbt_params.seed = derive_seed(spec.seed, "pipeline-gbt");
    fitted.model = gbt::fit(design, fitted.targets(train), gbt_params);
    return fitted;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json standardize_to_json(const tabular::StandardizationParams& p) {
    return nlohmann::json{{"mean", p.mean}, {"stddev", p.stddev}};
}

}  // namespace

std::string FittedPipeline::to_json() const {
    nlohmann::json j;
    j["numeric_fill"] = numeric_fill;
    j["category_fill"] = category_fill;

    nlohmann::json jtables = nlohmann::json::array();
    for (const FittedTable& table : tables) {
        nlohmann::json jt;
        jt["id"] = table.id;
        jt["out_dim"] = table.out_dim;
        jt["descriptions"] = table.table.descriptions;
        jt["vectors"] = matrix_to_json(table.table.vectors);
        if (table.model) {
            nlohmann::json jm;
            jm["vocab_words"] = table.model->vocab_words;
            jm["vocab_counts"] = table.model->vocab_counts;
            jm["word_vectors"] = matrix_to_json(table.model->word_vectors);
            jm["doc_tags"] = table.model->doc_tags;
            jm["doc_vectors"] = matrix_to_json(table.model->doc_vectors);
            jm["epoch_loss"] = table.model->epoch_loss;
            jt["doc2vec"] = std::move(jm);
        }
        if (table.pca) {
            nlohmann::json jp;
            jp["column_means"] = table.pca->column_means;
            jp["components"] = matrix_to_json(table.pca->components);
            jp["explained_variance"] = table.pca->explained_variance;
            jp["total_variance"] = table.pca->total_variance;
            jp["k"] = table.pca->k;
            jt["pca"] = std::move(jp);
        }
        if (!table.umap_coords.empty()) jt["umap_coords"] = table.umap_coords;
        jtables.push_back(std::move(jt));
    }
    j["tables"] = std::move(jtables);

    nlohmann::json jfeatures = nlohmann::json::array();
    for (const FittedFeature& feature : features) {
        nlohmann::json jf;
        jf["name"] = feature.name;
        switch (feature.mode) {
            case FittedFeature::Mode::Numeric:
                jf["mode"] = "numeric";
                jf["standardize"] = standardize_to_json(feature.standardize);
                break;
            case FittedFeature::Mode::OneHot:
                jf["mode"] = "onehot";
                jf["categories"] = feature.onehot->categories();
                break;
            case FittedFeature::Mode::Binary:
                jf["mode"] = "binary";
                jf["categories"] = feature.binary->categories();
                jf["bit_count"] = feature.binary->bit_count();
                break;
            case FittedFeature::Mode::Embedded: {
                jf["mode"] = "embedded";
                jf["text_source"] = feature.text_source;
                jf["table_index"] = feature.table_index;
                nlohmann::json js = nlohmann::json::array();
                for (const auto& p : feature.embedded_standardize)
                    js.push_back(standardize_to_json(p));
                jf["standardize"] = std::move(js);
                break;
            }
        }
        jfeatures.push_back(std::move(jf));
    }
    j["features"] = std::move(jfeatures);
    j["model"] = nlohmann::json::parse(model.to_json());
    return j.dump(2);
}

}  // namespace catembed::pipeline
