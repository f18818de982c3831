#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "catembed/tabular.hpp"
#include "support/helpers.hpp"

using namespace catembed;
using tabular::Column;
using tabular::Dataset;
using testutil::category_column;
using testutil::numeric_column;

TEST_SUITE_BEGIN("tabular");

TEST_CASE("impute fills a numeric gap with the column mean") {
    Dataset ds;
    ds.add_column("x", numeric_column({1.0, 0.0, 3.0}, {0, 1, 0}));
    const Dataset out = tabular::impute(ds, tabular::ImputeStrategy::ColumnMean);
    const auto& col = out.column("x");
    CHECK(col.numeric == std::vector<double>{1.0, 2.0, 3.0});
    CHECK_FALSE(col.any_missing());
}

TEST_CASE("impute fills a categorical gap with the mode") {
    Dataset ds;
    ds.add_column("c", category_column({"A", "A", ""}, {0, 0, 1}));
    const Dataset out = tabular::impute(ds, tabular::ImputeStrategy::ColumnMode);
    CHECK(out.column("c").categories == std::vector<std::string>{"A", "A", "A"});
    CHECK_FALSE(out.column("c").any_missing());
}

TEST_CASE("impute constants apply per column type") {
    Dataset ds;
    ds.add_column("x", numeric_column({5.0, 0.0}, {0, 1}));
    ds.add_column("c", category_column({"B", ""}, {0, 1}));
    const Dataset out = tabular::impute(ds, tabular::ImputeStrategy::Constant, -1.0, "none");
    CHECK(out.column("x").numeric[1] == -1.0);
    CHECK(out.column("c").categories[1] == "none");
}

TEST_CASE("impute leaves complete columns untouched") {
    Dataset ds;
    ds.add_column("x", numeric_column({4.0, 6.0}));
    const Dataset out = tabular::impute(ds, tabular::ImputeStrategy::ColumnMean);
    CHECK(out.column("x").numeric == std::vector<double>{4.0, 6.0});
}

TEST_CASE("standardize maps [2,4] to [-1,1]") {
    const std::vector<double> column{2.0, 4.0};
    const auto params = tabular::standardize_fit(column);
    CHECK(params.mean == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(params.stddev == doctest::Approx(1.0).epsilon(1e-12));
    const auto out = tabular::standardize_apply(column, params);
    CHECK(out[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("standardize sends a constant column to zeros") {
    const std::vector<double> column{5.0, 5.0, 5.0};
    const auto params = tabular::standardize_fit(column);
    CHECK(params.stddev == 0.0);
    for (double v : tabular::standardize_apply(column, params)) CHECK(v == 0.0);
}

TEST_CASE("standardized output has zero mean and unit variance") {
    std::vector<double> column(100);
    std::iota(column.begin(), column.end(), 1.0);
    const auto params = tabular::standardize_fit(column);
    CHECK(params.mean == doctest::Approx(50.5).epsilon(1e-12));

    const auto out = tabular::standardize_apply(column, params);
    double sum = 0.0, sum_sq = 0.0;
    for (double v : out) {
        sum += v;
        sum_sq += v * v;
    }
    CHECK(std::abs(sum / 100.0) < 1e-9);
    CHECK(sum_sq / 100.0 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("binary encoder codes categories in first-appearance order") {
    const std::vector<std::string> column{"A", "B", "C"};
    const auto enc = tabular::BinaryEncoder::fit(column);
    CHECK(enc.category_count() == 3);
    CHECK(enc.bit_count() == 2);
    CHECK(enc.code_of("A") == 0);
    CHECK(enc.code_of("B") == 1);
    CHECK(enc.code_of("C") == 2);

    // C = 2 = binary 10, most significant bit first
    const auto bits = enc.apply(std::vector<std::string>{"C"});
    REQUIRE(bits.size() == 2);
    CHECK(bits[0][0] == 1.0);
    CHECK(bits[1][0] == 0.0);
}

TEST_CASE("binary encoder keeps one bit for a single category") {
    const auto enc = tabular::BinaryEncoder::fit(std::vector<std::string>{"only", "only"});
    CHECK(enc.bit_count() == 1);
    const auto bits = enc.apply(std::vector<std::string>{"only"});
    CHECK(bits[0][0] == 0.0);
}

TEST_CASE("binary encoder uses two bits for four categories") {
    const auto enc = tabular::BinaryEncoder::fit(std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(enc.bit_count() == 2);
}

TEST_CASE("binary encoder maps unseen categories to the all-zero pattern") {
    const auto enc = tabular::BinaryEncoder::fit(std::vector<std::string>{"a", "b", "c"});
    const auto bits = enc.apply(std::vector<std::string>{"mystery"});
    for (const auto& col : bits) CHECK(col[0] == 0.0);
    CHECK_FALSE(enc.code_of("mystery").has_value());
}

TEST_CASE("binary decode inverts the bit pattern") {
    const std::vector<std::string> column{"a", "b", "c", "d", "e"};
    const auto enc = tabular::BinaryEncoder::fit(column);
    const auto bits = enc.apply(column);
    for (std::size_t row = 0; row < column.size(); ++row) {
        std::vector<double> pattern(enc.bit_count());
        for (std::size_t b = 0; b < enc.bit_count(); ++b) pattern[b] = bits[b][row];
        CHECK(tabular::BinaryEncoder::decode(pattern) == *enc.code_of(column[row]));
    }
}

TEST_CASE("one-hot encoder produces indicator columns") {
    const std::vector<std::string> column{"A", "B", "A"};
    const auto enc = tabular::OneHotEncoder::fit(column);
    REQUIRE(enc.category_count() == 2);
    const auto cols = enc.apply(column);
    CHECK(cols[0] == std::vector<double>{1.0, 0.0, 1.0});
    CHECK(cols[1] == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("assemble stitches blocks and tracks groups") {
    tabular::ColumnBlock f1{"f1", {"f1"}, {{1.0, 2.0, 3.0}}};
    tabular::ColumnBlock f2{"f2", {"f2"}, {{0.5, 0.5, 0.5}}};
    tabular::ColumnBlock f3{"f3", {"f3_b0", "f3_b1"}, {{0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}}};

    const auto design = tabular::assemble_design_matrix(3, {f1, f2, f3});
    CHECK(design.values.rows() == 3);
    CHECK(design.values.cols() == 4);
    CHECK(design.feature_names ==
          std::vector<std::string>{"f1", "f2", "f3_b0", "f3_b1"});
    CHECK(design.group_of == std::vector<std::string>{"f1", "f2", "f3", "f3"});

    const auto members = design.group_members();
    CHECK(members.at("f1") == std::vector<std::size_t>{0});
    CHECK(members.at("f3") == std::vector<std::size_t>{2, 3});
    CHECK(design.values(2, 0) == 3.0);
    CHECK(design.values(1, 3) == 1.0);
}

TEST_CASE("an embedded block keeps one group across its dimensions") {
    tabular::ColumnBlock e{"shape", {"shape_d0", "shape_d1", "shape_d2"},
                           {{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}}};
    const auto design = tabular::assemble_design_matrix(2, {e});
    CHECK(design.values.cols() == 3);
    CHECK(design.group_members().at("shape").size() == 3);
}

TEST_CASE("assembling an empty dataset is an error") {
    CHECK_THROWS_AS(tabular::assemble_design_matrix(0, {}), std::invalid_argument);
}

TEST_CASE("assemble rejects row-count mismatches and non-finite values") {
    tabular::ColumnBlock ok{"a", {"a"}, {{1.0, 2.0}}};
    tabular::ColumnBlock shorter{"b", {"b"}, {{1.0}}};
    CHECK_THROWS(tabular::assemble_design_matrix(2, {ok, shorter}));

    tabular::ColumnBlock nan_block{"c", {"c"}, {{1.0, std::nan("")}}};
    CHECK_THROWS(tabular::assemble_design_matrix(2, {ok, nan_block}));
}

TEST_CASE("dataset add_column enforces name and length consistency") {
    Dataset ds;
    ds.add_column("x", numeric_column({1.0, 2.0}));
    CHECK(ds.row_count == 2);
    CHECK_THROWS(ds.add_column("x", numeric_column({3.0, 4.0})));
    CHECK_THROWS(ds.add_column("y", numeric_column({1.0})));
}

TEST_CASE("select_rows keeps the requested order") {
    Dataset ds;
    ds.add_column("x", numeric_column({10.0, 20.0, 30.0}));
    ds.add_column("c", category_column({"a", "b", "c"}));
    const std::vector<int> idx{2, 0};
    const Dataset out = ds.select_rows(idx);
    CHECK(out.row_count == 2);
    CHECK(out.column("x").numeric == std::vector<double>{30.0, 10.0});
    CHECK(out.column("c").categories == std::vector<std::string>{"c", "a"});
}

TEST_CASE("schema validation catches structural mistakes") {
    using tabular::FeatureKind;
    tabular::FeatureSchema schema;
    schema.features.push_back({"x", FeatureKind::Numeric, "", ""});
    schema.features.push_back({"y", FeatureKind::Target, "", ""});
    CHECK_NOTHROW(schema.validate());

    tabular::FeatureSchema dup = schema;
    dup.features.push_back({"x", FeatureKind::Numeric, "", ""});
    CHECK_THROWS(dup.validate());

    tabular::FeatureSchema no_target;
    no_target.features.push_back({"x", FeatureKind::Numeric, "", ""});
    CHECK_THROWS(no_target.validate());

    tabular::FeatureSchema two_targets = schema;
    two_targets.features.push_back({"z", FeatureKind::Target, "", ""});
    CHECK_THROWS(two_targets.validate());

    tabular::FeatureSchema embedded = schema;
    embedded.features.push_back({"shape", FeatureKind::CategoricalEmbedded, "", ""});
    CHECK_THROWS(embedded.validate());
}

TEST_CASE("schema save and load round trip") {
    using tabular::FeatureKind;
    testutil::TempDir dir;
    tabular::FeatureSchema schema;
    schema.features.push_back({"x", FeatureKind::Numeric, "", "insert-geometry"});
    schema.features.push_back({"shape", FeatureKind::CategoricalEmbedded, "shape_desc", ""});
    schema.features.push_back({"shape_desc", FeatureKind::CategoricalOnehot, "", ""});
    schema.features.push_back({"t", FeatureKind::Target, "", ""});
    schema.save(dir.file("schema.json"));

    const auto back = tabular::FeatureSchema::load(dir.file("schema.json"));
    REQUIRE(back.features.size() == 4);
    CHECK(back.features[0].report_kind == "insert-geometry");
    CHECK(back.features[1].kind == FeatureKind::CategoricalEmbedded);
    CHECK(back.features[1].description_source == "shape_desc");
    CHECK(back.target().name == "t");
}

TEST_CASE("dataset CSV round trip preserves values and missingness") {
    using tabular::FeatureKind;
    testutil::TempDir dir;
    tabular::FeatureSchema schema;
    schema.features.push_back({"x", FeatureKind::Numeric, "", ""});
    schema.features.push_back({"c", FeatureKind::CategoricalOnehot, "", ""});
    schema.features.push_back({"t", FeatureKind::Target, "", ""});

    testutil::spit(dir.file("d.csv"), "x,c,t\n1.5,red,10\n,blue,11\n2.5,n/a,12\n");
    const Dataset ds = tabular::load_dataset(dir.file("d.csv"), schema);
    CHECK(ds.row_count == 3);
    CHECK(ds.column("x").missing == std::vector<char>{0, 1, 0});
    CHECK(ds.column("c").missing == std::vector<char>{0, 0, 1});
    CHECK(ds.column("x").numeric[2] == 2.5);
    CHECK(ds.column("c").categories[1] == "blue");

    tabular::save_dataset(dir.file("d2.csv"), ds, schema);
    const Dataset again = tabular::load_dataset(dir.file("d2.csv"), schema);
    CHECK(again.column("x").numeric == ds.column("x").numeric);
    CHECK(again.column("x").missing == ds.column("x").missing);
    CHECK(again.column("c").categories == ds.column("c").categories);
}

TEST_CASE("a file column the schema does not mention is an error") {
    using tabular::FeatureKind;
    testutil::TempDir dir;
    tabular::FeatureSchema schema;
    schema.features.push_back({"x", FeatureKind::Numeric, "", ""});
    schema.features.push_back({"t", FeatureKind::Target, "", ""});
    testutil::spit(dir.file("d.csv"), "x,t,surprise\n1,2,3\n");
    CHECK_THROWS(tabular::load_dataset(dir.file("d.csv"), schema));
}

TEST_SUITE_END();
