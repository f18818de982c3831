#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "catembed/csv.hpp"
#include "catembed/embed.hpp"
#include "catembed/pipeline.hpp"
#include "catembed/synth.hpp"
#include "support/helpers.hpp"

using namespace catembed;

namespace {

synth::SynthResult small_synth(std::uint64_t seed = 3) {
    synth::SynthParams params;
    params.n_runs = 12;
    params.disks_per_run = 4;
    params.effect_weights = synth::default_effect_weights();
    params.seed = seed;
    return synth::generate(params);
}

pipeline::PipelineSpec synth_spec() {
    pipeline::PipelineSpec spec;
    spec.schema = synth::default_schema();
    spec.doc2vec.vector_size = 3;
    spec.doc2vec.epochs = 300;
    spec.gbt.n_rounds = 20;
    spec.gbt.max_depth = 3;
    spec.seed = 5;
    return spec;
}

bool contains(const std::vector<std::string>& names, const std::string& name) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

// Tiny hand-rolled schema: one embedded feature with its own text column.
tabular::FeatureSchema text_schema() {
    tabular::FeatureSchema schema;
    schema.features = {
        {"s", tabular::FeatureKind::CategoricalEmbedded, "s_desc", ""},
        {"s_desc", tabular::FeatureKind::CategoricalOnehot, "", ""},
        {"y", tabular::FeatureKind::Target, "", ""},
    };
    return schema;
}

tabular::Dataset text_dataset(const std::vector<std::string>& descs,
                              const std::vector<double>& y) {
    tabular::Dataset ds;
    std::vector<std::string> tags;
    for (const auto& d : descs) tags.push_back(d.substr(0, 1));
    ds.add_column("s", testutil::category_column(tags));
    ds.add_column("s_desc", testutil::category_column(descs));
    ds.add_column("y", testutil::numeric_column(y));
    return ds;
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("description sources never become standalone features") {
    const auto result = small_synth();
    const auto fitted = pipeline::fit_pipeline(synth_spec(), result.dataset);

    for (const auto& feature : fitted.features)
        CHECK(feature.name.rfind("shape_desc", 0) != 0);

    const auto design = fitted.transform(result.dataset);
    for (const auto& name : design.feature_names) CHECK(name.rfind("shape_desc", 0) != 0);

    const auto kinds = fitted.group_kinds();
    CHECK(kinds.count("shape") == 1);
    CHECK(kinds.count("shape_desc") == 0);
    CHECK(kinds.count("coating_thickness") == 0);
}

TEST_CASE("derived column names follow the encoder conventions") {
    const auto result = small_synth();
    auto spec = synth_spec();
    spec.encoders["recipe"] = {pipeline::EncoderChoice::Kind::OneHot, ""};
    const auto fitted = pipeline::fit_pipeline(spec, result.dataset);
    const auto design = fitted.transform(result.dataset);

    CHECK(contains(design.feature_names, "n_inserts"));
    CHECK(contains(design.feature_names, "shape_d0"));
    CHECK(contains(design.feature_names, "shape_d2"));
    CHECK_FALSE(contains(design.feature_names, "shape_d3"));
    CHECK(contains(design.feature_names, "characteristic_b0"));

    for (const auto& feature : fitted.features) {
        if (feature.name != "recipe") continue;
        REQUIRE(feature.onehot.has_value());
        for (const auto& category : feature.onehot->categories())
            CHECK(contains(design.feature_names, "recipe=" + category));
    }
}

TEST_CASE("group membership maps every derived column back to its feature") {
    const auto result = small_synth();
    const auto fitted = pipeline::fit_pipeline(synth_spec(), result.dataset);
    const auto design = fitted.transform(result.dataset);
    const auto group_of = fitted.group_of();

    REQUIRE(design.feature_names.size() == design.group_of.size());
    for (std::size_t j = 0; j < design.feature_names.size(); ++j)
        CHECK(group_of.at(design.feature_names[j]) == design.group_of[j]);
    CHECK(group_of.at("shape_d0") == "shape");
    CHECK(group_of.at("n_inserts") == "n_inserts");
    CHECK(group_of.at("recipe_b0") == "recipe");
}

TEST_CASE("group kinds tag numeric, recipe and geometry groups") {
    const auto result = small_synth();
    const auto fitted = pipeline::fit_pipeline(synth_spec(), result.dataset);
    const auto kinds = fitted.group_kinds();
    CHECK(kinds.at("n_inserts") == "numeric");
    CHECK(kinds.at("clearance_angle") == "insert-geometry");
    CHECK(kinds.at("recipe") == "recipe");
    CHECK(kinds.at("shape") == "insert-geometry");
    CHECK(kinds.at("characteristic") == "insert-geometry");
}

TEST_CASE("encoder overrides change the representation") {
    const auto result = small_synth();
    const auto binary_fit = pipeline::fit_pipeline(synth_spec(), result.dataset);
    auto spec = synth_spec();
    spec.encoders["recipe"] = {pipeline::EncoderChoice::Kind::OneHot, ""};
    const auto onehot_fit = pipeline::fit_pipeline(spec, result.dataset);

    const auto binary_names = binary_fit.transform(result.dataset).feature_names;
    const auto onehot_names = onehot_fit.transform(result.dataset).feature_names;
    CHECK(contains(binary_names, "recipe_b0"));
    CHECK_FALSE(contains(binary_names, "recipe=R1"));
    CHECK_FALSE(contains(onehot_names, "recipe_b0"));

    std::size_t binary_bits = 0, onehot_cats = 0;
    for (const auto& name : binary_names)
        if (name.rfind("recipe_b", 0) == 0) ++binary_bits;
    for (const auto& name : onehot_names)
        if (name.rfind("recipe=", 0) == 0) ++onehot_cats;
    CHECK(binary_bits == 2);  // three recipes need two bits
    CHECK(onehot_cats == 3);

    auto bad = synth_spec();
    bad.encoders["not_a_feature"] = {pipeline::EncoderChoice::Kind::OneHot, ""};
    CHECK_THROWS(pipeline::fit_pipeline(bad, result.dataset));
    auto numeric_override = synth_spec();
    numeric_override.encoders["n_inserts"] = {pipeline::EncoderChoice::Kind::OneHot, ""};
    CHECK_THROWS(pipeline::fit_pipeline(numeric_override, result.dataset));
}

TEST_CASE("an external table supplies the embedding vectors") {
    testutil::TempDir dir;
    const auto ds = text_dataset({"alpha beta", "gamma delta", "alpha beta", "gamma delta"},
                                 {1.0, 2.0, 1.0, 2.0});

    embed::EmbeddingTable table;
    table.descriptions = {"alpha beta", "gamma delta"};
    table.vectors = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    table.dimension = 2;
    table.save(dir.file("table.csv"));

    pipeline::PipelineSpec spec;
    spec.schema = text_schema();
    spec.encoders["s"] = {pipeline::EncoderChoice::Kind::ExternalTable,
                          dir.file("table.csv").string()};
    spec.gbt.n_rounds = 5;
    const auto fitted = pipeline::fit_pipeline(spec, ds);
    const auto design = fitted.transform(ds);
    CHECK(contains(design.feature_names, "s_d0"));
    CHECK(contains(design.feature_names, "s_d1"));
    CHECK_FALSE(contains(design.feature_names, "s_d2"));
    CHECK(fitted.tables.at(0).id == dir.file("table.csv").string());

    // a table that misses a description in play cannot be applied
    embed::EmbeddingTable partial;
    partial.descriptions = {"alpha beta"};
    partial.vectors = Matrix::from_rows({{1.0, 0.0}});
    partial.dimension = 2;
    partial.save(dir.file("partial.csv"));
    spec.encoders["s"].table_path = dir.file("partial.csv").string();
    CHECK_THROWS(pipeline::fit_pipeline(spec, ds));

    spec.encoders["s"].table_path = "";
    CHECK_THROWS(pipeline::fit_pipeline(spec, ds));
}

TEST_CASE("a pca stage narrows the embedded block") {
    const auto result = small_synth();
    auto spec = synth_spec();
    spec.doc2vec.vector_size = 5;
    spec.reduction.kind = pipeline::ReductionSpec::Kind::Pca;
    spec.reduction.pca_k = 2;
    const auto fitted = pipeline::fit_pipeline(spec, result.dataset);
    const auto design = fitted.transform(result.dataset);
    CHECK(contains(design.feature_names, "shape_d0"));
    CHECK(contains(design.feature_names, "shape_d1"));
    CHECK_FALSE(contains(design.feature_names, "shape_d2"));
    CHECK(fitted.tables.at(0).out_dim == 2);
    CHECK(fitted.tables.at(0).pca.has_value());
}

TEST_CASE("a umap stage replaces vectors with fitted coordinates") {
    const auto result = small_synth();
    auto spec = synth_spec();
    spec.reduction.kind = pipeline::ReductionSpec::Kind::Umap;
    spec.reduction.umap.target_dim = 2;
    spec.reduction.umap.n_epochs = 50;
    const auto fitted = pipeline::fit_pipeline(spec, result.dataset);
    CHECK(fitted.tables.at(0).out_dim == 2);
    CHECK_FALSE(fitted.tables.at(0).umap_coords.empty());
    const auto design = fitted.transform(result.dataset);
    CHECK(contains(design.feature_names, "shape_d1"));
    CHECK_FALSE(contains(design.feature_names, "shape_d2"));
}

TEST_CASE("unknown descriptions fall back to model inference") {
    const auto train = text_dataset({"alpha beta", "gamma delta", "alpha beta", "gamma delta"},
                                    {1.0, 2.0, 1.0, 2.0});
    pipeline::PipelineSpec spec;
    spec.schema = text_schema();
    spec.doc2vec.vector_size = 3;
    spec.doc2vec.epochs = 100;
    spec.gbt.n_rounds = 5;
    const auto fitted = pipeline::fit_pipeline(spec, train);

    const auto probe = text_dataset({"alpha gamma"}, {0.0});
    CHECK_NOTHROW(fitted.predict(probe));
}

TEST_CASE("the global embedding fit sees descriptions beyond the training rows") {
    const auto full = text_dataset(
        {"alpha beta", "gamma delta", "epsilon zeta", "alpha beta", "gamma delta", "alpha beta"},
        {1.0, 2.0, 3.0, 1.0, 2.0, 1.0});
    const std::vector<int> train_rows{0, 1, 3, 4, 5};  // row 2 held out
    const auto train = full.select_rows(train_rows);

    pipeline::PipelineSpec spec;
    spec.schema = text_schema();
    spec.doc2vec.vector_size = 2;
    spec.doc2vec.epochs = 100;
    spec.gbt.n_rounds = 5;

    const auto strict = pipeline::fit_pipeline(spec, train, &full);
    CHECK_FALSE(contains(strict.tables.at(0).table.descriptions, "epsilon zeta"));

    spec.global_embedding_fit = true;
    const auto leaky = pipeline::fit_pipeline(spec, train, &full);
    CHECK(contains(leaky.tables.at(0).table.descriptions, "epsilon zeta"));
}

TEST_CASE("imputation learned on the training rows fills later data") {
    tabular::FeatureSchema schema;
    schema.features = {
        {"x", tabular::FeatureKind::Numeric, "", ""},
        {"c", tabular::FeatureKind::CategoricalOnehot, "", ""},
        {"y", tabular::FeatureKind::Target, "", ""},
    };
    tabular::Dataset train;
    train.add_column("x", testutil::numeric_column({1.0, 3.0, 0.0}, {0, 0, 1}));
    train.add_column("c", testutil::category_column({"a", "a", "b"}));
    train.add_column("y", testutil::numeric_column({1.0, 2.0, 3.0}));

    pipeline::PipelineSpec spec;
    spec.schema = schema;
    spec.gbt.n_rounds = 3;
    const auto fitted = pipeline::fit_pipeline(spec, train);
    CHECK(fitted.numeric_fill.at("x") == 2.0);
    CHECK(fitted.category_fill.at("c") == "a");

    tabular::Dataset probe;
    probe.add_column("x", testutil::numeric_column({0.0}, {1}));
    probe.add_column("c", testutil::category_column({""}, {1}));
    probe.add_column("y", testutil::numeric_column({0.0}));
    const auto design = fitted.transform(probe);

    // filled with the training mean, the standardized value sits at zero
    const auto& names = design.feature_names;
    const auto x_at = static_cast<std::size_t>(
        std::find(names.begin(), names.end(), "x") - names.begin());
    CHECK(design.values(0, x_at) == 0.0);
    const auto a_at = static_cast<std::size_t>(
        std::find(names.begin(), names.end(), "c=a") - names.begin());
    CHECK(design.values(0, a_at) == 1.0);
}

TEST_CASE("fitted pipelines serialize deterministically") {
    const auto result = small_synth();
    const auto spec = synth_spec();
    const auto first = pipeline::fit_pipeline(spec, result.dataset);
    const auto second = pipeline::fit_pipeline(spec, result.dataset);
    CHECK(first.to_json() == second.to_json());

    auto other = spec;
    other.seed = 6;
    const auto moved = pipeline::fit_pipeline(other, result.dataset);
    CHECK(first.to_json() != moved.to_json());
}

TEST_CASE("target extraction validates the column") {
    const auto result = small_synth();
    const auto fitted = pipeline::fit_pipeline(synth_spec(), result.dataset);

    auto holed = result.dataset;
    holed.column("coating_thickness").missing[0] = 1;
    CHECK_THROWS(fitted.targets(holed));

    CHECK_THROWS(pipeline::fit_pipeline(synth_spec(), result.dataset.select_rows(
                                                          std::vector<int>{0})));
}

TEST_SUITE_END();
