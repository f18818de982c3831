#include "catembed/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "catembed/csv.hpp"
#include "catembed/iso.hpp"
#include "catembed/log.hpp"
#include "catembed/rng.hpp"
#include "catembed/shap.hpp"
#include "catembed/similarity.hpp"

namespace catembed::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    return text;
}

std::string digest_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cli: cannot open '" + path.string() + "' for digest");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return digest_hex(fnv1a64(buffer.str()));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cli: cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("cli: short write to '" + path.string() + "'");
}

// Records what a subcommand read and wrote. Content digests instead of
// timestamps keep rerun outputs byte-identical and verifiable.
class Manifest {
public:
    Manifest(std::string command, std::uint64_t seed, fs::path out_dir)
        : out_dir_(std::move(out_dir)) {
        if (out_dir_.empty()) throw std::runtime_error("cli: output directory must not be empty");
        doc_["command"] = std::move(command);
        doc_["seed"] = seed;
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::object();
        fs::create_directories(out_dir_);
    }

    void input(const fs::path& path) { doc_["inputs"][path.string()] = file_digest(path); }
    void output(const std::string& name) { doc_["outputs"][name] = file_digest(out_dir_ / name); }
    const fs::path& dir() const { return out_dir_; }

    void write() const { write_text(out_dir_ / "manifest.json", doc_.dump(2) + "\n"); }

private:
    json doc_;
    fs::path out_dir_;
};

void require_keys(const json& doc, const std::set<std::string>& allowed,
                  const std::string& where) {
    for (const auto& [key, value] : doc.items())
        if (!allowed.count(key))
            throw std::runtime_error("config: unknown key '" + key + "' in " + where);
}

pipeline::EncoderChoice parse_encoder(const json& value, const std::string& feature) {
    pipeline::EncoderChoice choice;
    if (value.is_string()) {
        choice.kind = pipeline::encoder_kind_from_string(value.get<std::string>());
    } else if (value.is_object()) {
        require_keys(value, {"kind", "table"}, "encoders." + feature);
        choice.kind = pipeline::encoder_kind_from_string(value.at("kind").get<std::string>());
        if (value.contains("table")) choice.table_path = value.at("table").get<std::string>();
    } else {
        throw std::runtime_error("config: encoder for '" + feature +
                                 "' must be a string or an object");
    }
    if (choice.kind == pipeline::EncoderChoice::Kind::ExternalTable && choice.table_path.empty())
        throw std::runtime_error("config: external encoder for '" + feature +
                                 "' needs a table path");
    return choice;
}

std::map<std::string, pipeline::EncoderChoice> parse_encoders(const json& doc,
                                                              const std::string& where) {
    if (!doc.is_object()) throw std::runtime_error("config: " + where + " must be an object");
    std::map<std::string, pipeline::EncoderChoice> out;
    for (const auto& [name, value] : doc.items()) out.emplace(name, parse_encoder(value, name));
    return out;
}

pipeline::ReductionSpec parse_reduction(const json& doc) {
    require_keys(doc, {"kind", "k", "n_neighbors", "min_dist", "n_epochs", "negative_sample_rate"},
                 "reduction");
    pipeline::ReductionSpec spec;
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "none") {
        spec.kind = pipeline::ReductionSpec::Kind::None;
    } else if (kind == "pca") {
        spec.kind = pipeline::ReductionSpec::Kind::Pca;
        if (doc.contains("k")) spec.pca_k = doc.at("k").get<std::size_t>();
    } else if (kind == "umap") {
        spec.kind = pipeline::ReductionSpec::Kind::Umap;
        if (doc.contains("k")) spec.umap.target_dim = doc.at("k").get<std::size_t>();
        if (doc.contains("n_neighbors")) spec.umap.n_neighbors = doc.at("n_neighbors").get<std::size_t>();
        if (doc.contains("min_dist")) spec.umap.min_dist = doc.at("min_dist").get<double>();
        if (doc.contains("n_epochs")) spec.umap.n_epochs = doc.at("n_epochs").get<std::size_t>();
        if (doc.contains("negative_sample_rate"))
            spec.umap.negative_sample_rate = doc.at("negative_sample_rate").get<std::size_t>();
    } else {
        throw std::runtime_error("config: unknown reduction kind '" + kind + "'");
    }
    return spec;
}

eval::BandMode parse_band(const std::string& name) {
    if (name == "sigma") return eval::BandMode::OneSigma;
    if (name == "t999") return eval::BandMode::TInterval999;
    throw std::runtime_error("config: unknown band mode '" + name + "' (want sigma or t999)");
}

struct LoadedData {
    tabular::FeatureSchema schema;
    tabular::Dataset ds;
};

LoadedData load_data(const RunConfig& cfg, Manifest& manifest) {
    if (cfg.dataset.empty()) throw std::runtime_error("cli: a dataset path is required");
    if (cfg.schema.empty()) throw std::runtime_error("cli: a schema path is required");
    manifest.input(cfg.schema);
    manifest.input(cfg.dataset);
    LoadedData out;
    out.schema = tabular::FeatureSchema::load(cfg.schema);
    out.ds = tabular::load_dataset(cfg.dataset, out.schema);
    return out;
}

void record_external_tables(const std::map<std::string, pipeline::EncoderChoice>& encoders,
                            Manifest& manifest) {
    for (const auto& [feature, choice] : encoders)
        if (choice.kind == pipeline::EncoderChoice::Kind::ExternalTable)
            manifest.input(choice.table_path);
}

void write_gain_report(const pipeline::FittedPipeline& fitted, const fs::path& path) {
    const auto gain = gbt::grouped_importance(gbt::total_gain_importance(fitted.model),
                                              fitted.group_of());
    const auto report =
        shap::rank_report(gain, fitted.group_kinds(), static_cast<int>(gain.size()));
    shap::save_report(report, path);
}

void write_shap_report(const pipeline::FittedPipeline& fitted, const tabular::Dataset& ds,
                       bool per_column_mean, const fs::path& path) {
    const tabular::DesignMatrix design = fitted.transform(ds);
    const shap::ShapMatrix attributions = shap::tree_shap(fitted.model, design.values);
    const auto grouped = shap::grouped_shap(attributions, fitted.group_of(), per_column_mean);
    const auto report =
        shap::rank_report(grouped, fitted.group_kinds(), static_cast<int>(grouped.size()));
    shap::save_report(report, path);
}

void cmd_synth(const RunConfig& cfg, const std::string& config_path) {
    Manifest manifest("synth", cfg.seed, cfg.out_dir);
    if (!config_path.empty()) manifest.input(config_path);

    synth::SynthParams params = cfg.synth;
    params.seed = cfg.seed;
    if (!cfg.synth_catalog.empty()) {
        manifest.input(cfg.synth_catalog);
        params.insert_catalog = synth::load_catalog(cfg.synth_catalog);
    }
    const synth::SynthResult result = synth::generate(params);
    const tabular::FeatureSchema schema = synth::default_schema();

    tabular::save_dataset(manifest.dir() / "dataset.csv", result.dataset, schema);
    schema.save(manifest.dir() / "schema.json");
    synth::save_catalog(manifest.dir() / "catalog.csv", params.insert_catalog.empty()
                                                            ? synth::default_catalog()
                                                            : params.insert_catalog);
    json truth;
    truth["ranking"] = result.truth.ranking;
    truth["effect_scale"] = json::object();
    for (const auto& [group, scale] : result.truth.effect_scale)
        truth["effect_scale"][group] = scale;
    write_text(manifest.dir() / "truth.json", truth.dump(2) + "\n");

    for (const char* name : {"dataset.csv", "schema.json", "catalog.csv", "truth.json"})
        manifest.output(name);
    manifest.write();
    logging::info("synth: wrote " + std::to_string(result.dataset.row_count) + " rows to " +
                  (manifest.dir() / "dataset.csv").string());
}

json iso_json(const std::string& code, const iso::InsertFeatures& f) {
    json obj;
    obj["code"] = code;
    auto put = [&](const char* key, const auto& opt) {
        if (opt)
            obj[key] = *opt;
        else
            obj[key] = nullptr;
    };
    put("shape_description", f.shape_description);
    put("included_angle", f.included_angle);
    put("clearance_angle", f.clearance_angle);
    put("cutting_length", f.cutting_length);
    put("thickness", f.thickness);
    put("cutting_length_tolerance", f.cutting_length_tolerance);
    put("thickness_tolerance", f.thickness_tolerance);
    put("characteristic", f.characteristic);
    return obj;
}

void cmd_parse_iso(const std::vector<std::string>& codes, const std::string& table_path,
                   const std::string& out_dir) {
    const iso::IsoCodeTable table =
        table_path.empty() ? iso::IsoCodeTable::builtin_default() : iso::IsoCodeTable::load(table_path);

    if (out_dir.empty()) {
        for (const auto& code : codes)
            std::printf("%s\n", iso_json(code, iso::parse_iso(code, table)).dump().c_str());
        return;
    }

    Manifest manifest("parse-iso", 0, out_dir);
    if (!table_path.empty()) manifest.input(table_path);
    csv::Table out;
    out.header = {"code",           "shape_description",        "included_angle",
                  "clearance_angle", "cutting_length",          "thickness",
                  "cutting_length_tolerance", "thickness_tolerance", "characteristic"};
    auto cell_num = [](const std::optional<double>& v) {
        return v ? csv::format_double(*v) : std::string("n/a");
    };
    auto cell_str = [](const std::optional<std::string>& v) { return v ? *v : std::string("n/a"); };
    for (const auto& code : codes) {
        const iso::InsertFeatures f = iso::parse_iso(code, table);
        out.rows.push_back({code, cell_str(f.shape_description), cell_num(f.included_angle),
                            cell_num(f.clearance_angle), cell_num(f.cutting_length),
                            cell_num(f.thickness), cell_num(f.cutting_length_tolerance),
                            cell_num(f.thickness_tolerance), cell_str(f.characteristic)});
    }
    csv::write_file(manifest.dir() / "parsed.csv", out);
    manifest.output("parsed.csv");
    manifest.write();
}

void cmd_embed(const RunConfig& cfg, const std::string& config_path,
               std::vector<std::string> columns) {
    Manifest manifest("embed", cfg.seed, cfg.out_dir);
    if (!config_path.empty()) manifest.input(config_path);
    const LoadedData data = load_data(cfg, manifest);

    if (columns.empty())
        for (const auto& feature : data.schema.features)
            if (feature.kind == tabular::FeatureKind::CategoricalEmbedded)
                columns.push_back(feature.description_source.empty() ? feature.name
                                                                     : feature.description_source);
    std::vector<std::string> unique_columns;
    for (const auto& name : columns)
        if (std::find(unique_columns.begin(), unique_columns.end(), name) == unique_columns.end())
            unique_columns.push_back(name);
    if (unique_columns.empty())
        throw std::runtime_error("cli: no embedded features in the schema and no --column given");

    std::vector<std::string> texts;
    std::set<std::string> seen;
    for (const auto& name : unique_columns) {
        const tabular::Column& col = data.ds.column(name);
        if (col.type != tabular::Column::Type::Categorical)
            throw std::runtime_error("cli: column '" + name + "' is not a text column");
        for (std::size_t i = 0; i < col.categories.size(); ++i) {
            if (col.missing[i]) continue;
            if (seen.insert(col.categories[i]).second) texts.push_back(col.categories[i]);
        }
    }
    if (texts.empty()) throw std::runtime_error("cli: no descriptions to embed");

    embed::Corpus corpus;
    corpus.documents.reserve(texts.size());
    for (const auto& text : texts) corpus.documents.push_back({text, embed::preprocess(text)});
    corpus.validate();

    embed::Doc2VecParams params = cfg.doc2vec;
    params.seed = derive_seed(cfg.seed, "cli-embed");
    const embed::Doc2VecModel model = embed::train_doc2vec(corpus, params);

    embed::EmbeddingTable::from_doc2vec(model, "doc2vec").save(manifest.dir() / "embeddings.csv");
    csv::Table loss;
    loss.header = {"epoch", "loss"};
    for (std::size_t e = 0; e < model.epoch_loss.size(); ++e)
        loss.rows.push_back({std::to_string(e), csv::format_double(model.epoch_loss[e])});
    csv::write_file(manifest.dir() / "training_loss.csv", loss);

    manifest.output("embeddings.csv");
    manifest.output("training_loss.csv");
    manifest.write();
}

void cmd_similarity(const RunConfig& cfg, const std::string& table_path) {
    if (table_path.empty()) throw std::runtime_error("cli: similarity needs --table");
    Manifest manifest("similarity", cfg.seed, cfg.out_dir);
    manifest.input(table_path);
    const embed::EmbeddingTable table = embed::EmbeddingTable::load(table_path);
    const sim::SimilarityMatrix matrix = sim::similarity_matrix(table.descriptions, table.vectors);
    sim::save_similarity(matrix, manifest.dir() / "similarity.csv");
    manifest.output("similarity.csv");
    manifest.write();
}

void cmd_reduce(const RunConfig& cfg, const std::string& table_path, const std::string& method,
                std::size_t dim, const reduce::UmapParams& umap) {
    if (table_path.empty()) throw std::runtime_error("cli: reduce needs --table");
    Manifest manifest("reduce", cfg.seed, cfg.out_dir);
    manifest.input(table_path);
    const embed::EmbeddingTable table = embed::EmbeddingTable::load(table_path);

    Matrix reduced;
    if (method == "pca") {
        const reduce::PcaModel model = reduce::pca_fit(table.vectors, dim);
        reduced = reduce::pca_transform(model, table.vectors);
        csv::Table ev;
        ev.header = {"component", "variance", "ratio"};
        for (std::size_t i = 0; i < model.explained_variance.size(); ++i) {
            const double ratio = model.total_variance > 0.0
                                     ? model.explained_variance[i] / model.total_variance
                                     : 0.0;
            ev.rows.push_back({std::to_string(i), csv::format_double(model.explained_variance[i]),
                               csv::format_double(ratio)});
        }
        csv::write_file(manifest.dir() / "explained_variance.csv", ev);
        manifest.output("explained_variance.csv");
    } else if (method == "umap") {
        reduce::UmapParams params = umap;
        params.target_dim = dim;
        params.seed = derive_seed(cfg.seed, "cli-umap");
        reduced = reduce::umap_fit_transform(table.vectors, params);
    } else {
        throw std::runtime_error("cli: unknown reduction method '" + method + "' (want pca or umap)");
    }

    embed::EmbeddingTable out;
    out.descriptions = table.descriptions;
    out.vectors = std::move(reduced);
    out.dimension = dim;
    out.source = table.source.empty() ? method : table.source + "+" + method;
    out.save(manifest.dir() / "reduced.csv");
    manifest.output("reduced.csv");
    manifest.write();
}

void cmd_train(const RunConfig& cfg, const std::string& config_path) {
    Manifest manifest("train", cfg.seed, cfg.out_dir);
    if (!config_path.empty()) manifest.input(config_path);
    const LoadedData data = load_data(cfg, manifest);
    record_external_tables(cfg.encoders, manifest);

    const pipeline::FittedPipeline fitted =
        pipeline::fit_pipeline(cfg.pipeline_spec(data.schema), data.ds);
    write_text(manifest.dir() / "model.json", fitted.to_json() + "\n");
    write_gain_report(fitted, manifest.dir() / "gain_report.csv");

    manifest.output("model.json");
    manifest.output("gain_report.csv");
    manifest.write();
}

void cmd_evaluate(const RunConfig& cfg, const std::string& config_path) {
    Manifest manifest("evaluate", cfg.seed, cfg.out_dir);
    if (!config_path.empty()) manifest.input(config_path);
    const LoadedData data = load_data(cfg, manifest);
    record_external_tables(cfg.encoders, manifest);

    const eval::CvReport report = eval::learning_curve(
        cfg.pipeline_spec(data.schema), data.ds, cfg.k_folds, cfg.fractions, cfg.seed, cfg.band_mode);
    eval::save_fold_csv(report, manifest.dir() / "folds.csv");
    eval::save_aggregate_csv(report, manifest.dir() / "aggregate.csv");

    manifest.output("folds.csv");
    manifest.output("aggregate.csv");
    manifest.write();
}

void cmd_explain(const RunConfig& cfg, const std::string& config_path) {
    Manifest manifest("explain", cfg.seed, cfg.out_dir);
    if (!config_path.empty()) manifest.input(config_path);
    const LoadedData data = load_data(cfg, manifest);
    record_external_tables(cfg.encoders, manifest);

    const pipeline::FittedPipeline fitted =
        pipeline::fit_pipeline(cfg.pipeline_spec(data.schema), data.ds);
    write_shap_report(fitted, data.ds, cfg.shap_per_column_mean,
                      manifest.dir() / "shap_report.csv");
    write_gain_report(fitted, manifest.dir() / "gain_report.csv");

    manifest.output("shap_report.csv");
    manifest.output("gain_report.csv");
    manifest.write();
}

void cmd_pipeline(const RunConfig& cfg, const std::string& config_path,
                  const std::string& variant_filter) {
    Manifest manifest("pipeline", cfg.seed, cfg.out_dir);
    if (!config_path.empty()) manifest.input(config_path);
    const LoadedData data = load_data(cfg, manifest);

    std::map<std::string, std::map<std::string, pipeline::EncoderChoice>> variants = cfg.variants;
    if (variants.empty()) variants.emplace("default", std::map<std::string, pipeline::EncoderChoice>{});
    if (!variant_filter.empty()) {
        const auto it = variants.find(variant_filter);
        if (it == variants.end())
            throw std::runtime_error("cli: variant '" + variant_filter + "' is not in the config");
        variants = {{it->first, it->second}};
    }
    for (const auto& [name, overlay] : variants) {
        if (name.empty() ||
            name.find_first_not_of("abcdefghijklmnopqrstuvwxyz"
                                   "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") != std::string::npos)
            throw std::runtime_error("cli: variant name '" + name +
                                     "' must match [A-Za-z0-9_-]+ to name its files");
        record_external_tables(overlay, manifest);
    }
    record_external_tables(cfg.encoders, manifest);

    // Every variant shares the master seed, so fold plans match and the
    // comparison across encoders is paired.
    for (const auto& [name, overlay] : variants) {
        pipeline::PipelineSpec spec = cfg.pipeline_spec(data.schema);
        for (const auto& [feature, choice] : overlay) spec.encoders[feature] = choice;

        const eval::CvReport report = eval::learning_curve(spec, data.ds, cfg.k_folds,
                                                           cfg.fractions, cfg.seed, cfg.band_mode);
        eval::save_fold_csv(report, manifest.dir() / (name + "_folds.csv"));
        eval::save_aggregate_csv(report, manifest.dir() / (name + "_aggregate.csv"));

        const pipeline::FittedPipeline fitted = pipeline::fit_pipeline(spec, data.ds);
        write_shap_report(fitted, data.ds, cfg.shap_per_column_mean,
                          manifest.dir() / (name + "_shap.csv"));
        write_gain_report(fitted, manifest.dir() / (name + "_gain.csv"));

        for (const char* suffix : {"_folds.csv", "_aggregate.csv", "_shap.csv", "_gain.csv"})
            manifest.output(name + suffix);
        logging::info("pipeline: finished variant " + name);
    }
    manifest.write();
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config: " + one_line(e.what()));
    }
    if (!doc.is_object()) throw std::runtime_error("config: top level must be an object");
    require_keys(doc,
                 {"dataset", "schema", "out", "seed", "encoders", "variants", "doc2vec",
                  "reduction", "gbt", "eval", "synth", "global_embedding_fit",
                  "shap_per_column_mean"},
                 "config");

    RunConfig cfg;
    if (doc.contains("dataset")) cfg.dataset = doc.at("dataset").get<std::string>();
    if (doc.contains("schema")) cfg.schema = doc.at("schema").get<std::string>();
    if (doc.contains("out")) cfg.out_dir = doc.at("out").get<std::string>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("encoders")) cfg.encoders = parse_encoders(doc.at("encoders"), "encoders");
    if (doc.contains("variants")) {
        const json& v = doc.at("variants");
        if (!v.is_object()) throw std::runtime_error("config: variants must be an object");
        for (const auto& [name, value] : v.items())
            cfg.variants.emplace(name, parse_encoders(value, "variants." + name));
    }
    if (doc.contains("doc2vec")) {
        const json& d = doc.at("doc2vec");
        require_keys(d, {"vector_size", "min_count", "epochs", "learning_rate", "negative_samples"},
                     "doc2vec");
        if (d.contains("vector_size")) cfg.doc2vec.vector_size = d.at("vector_size").get<int>();
        if (d.contains("min_count")) cfg.doc2vec.min_count = d.at("min_count").get<int>();
        if (d.contains("epochs")) cfg.doc2vec.epochs = d.at("epochs").get<int>();
        if (d.contains("learning_rate"))
            cfg.doc2vec.learning_rate = d.at("learning_rate").get<double>();
        if (d.contains("negative_samples"))
            cfg.doc2vec.negative_samples = d.at("negative_samples").get<int>();
    }
    if (doc.contains("reduction")) cfg.reduction = parse_reduction(doc.at("reduction"));
    if (doc.contains("gbt")) {
        const json& g = doc.at("gbt");
        require_keys(g,
                     {"n_rounds", "max_depth", "learning_rate", "lambda", "gamma",
                      "min_child_weight", "subsample", "colsample"},
                     "gbt");
        if (g.contains("n_rounds")) cfg.gbt.n_rounds = g.at("n_rounds").get<int>();
        if (g.contains("max_depth")) cfg.gbt.max_depth = g.at("max_depth").get<int>();
        if (g.contains("learning_rate")) cfg.gbt.learning_rate = g.at("learning_rate").get<double>();
        if (g.contains("lambda")) cfg.gbt.lambda = g.at("lambda").get<double>();
        if (g.contains("gamma")) cfg.gbt.gamma = g.at("gamma").get<double>();
        if (g.contains("min_child_weight"))
            cfg.gbt.min_child_weight = g.at("min_child_weight").get<double>();
        if (g.contains("subsample")) cfg.gbt.subsample = g.at("subsample").get<double>();
        if (g.contains("colsample")) cfg.gbt.colsample = g.at("colsample").get<double>();
    }
    if (doc.contains("eval")) {
        const json& e = doc.at("eval");
        require_keys(e, {"k", "fractions", "band"}, "eval");
        if (e.contains("k")) cfg.k_folds = e.at("k").get<int>();
        if (e.contains("fractions")) cfg.fractions = e.at("fractions").get<std::vector<double>>();
        if (e.contains("band")) cfg.band_mode = parse_band(e.at("band").get<std::string>());
    }
    if (doc.contains("synth")) {
        const json& s = doc.at("synth");
        require_keys(s, {"runs", "disks", "noise", "weights", "catalog"}, "synth");
        if (s.contains("runs")) cfg.synth.n_runs = s.at("runs").get<std::size_t>();
        if (s.contains("disks")) cfg.synth.disks_per_run = s.at("disks").get<std::size_t>();
        if (s.contains("noise")) cfg.synth.noise_std = s.at("noise").get<double>();
        if (s.contains("weights")) {
            if (!s.at("weights").is_object())
                throw std::runtime_error("config: synth.weights must be an object");
            cfg.synth.effect_weights.clear();
            for (const auto& [group, w] : s.at("weights").items())
                cfg.synth.effect_weights[group] = w.get<double>();
        }
        if (s.contains("catalog")) cfg.synth_catalog = s.at("catalog").get<std::string>();
    }
    if (doc.contains("global_embedding_fit"))
        cfg.global_embedding_fit = doc.at("global_embedding_fit").get<bool>();
    if (doc.contains("shap_per_column_mean"))
        cfg.shap_per_column_mean = doc.at("shap_per_column_mean").get<bool>();
    return cfg;
}

pipeline::PipelineSpec RunConfig::pipeline_spec(tabular::FeatureSchema schema) const {
    pipeline::PipelineSpec spec;
    spec.schema = std::move(schema);
    spec.encoders = encoders;
    spec.doc2vec = doc2vec;
    spec.reduction = reduction;
    spec.gbt = gbt;
    spec.global_embedding_fit = global_embedding_fit;
    spec.shap_per_column_mean = shap_per_column_mean;
    spec.seed = seed;
    return spec;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"categorical-embedding encoders, boosted trees and evaluation artifacts"};
    app.require_subcommand(1);

    // Shared flags resolved against an optional JSON config; explicit flags
    // win over config values.
    struct Common {
        CLI::App* cmd = nullptr;
        bool has_data_flags = false;
        std::string config;
        std::string out;
        std::uint64_t seed = 1;
        std::string dataset;
        std::string schema;

        void attach(CLI::App* sub, bool with_data) {
            cmd = sub;
            has_data_flags = with_data;
            sub->add_option("--config", config, "JSON config file");
            sub->add_option("--out", out, "output directory");
            sub->add_option("--seed", seed, "master seed override");
            if (with_data) {
                sub->add_option("--dataset", dataset, "dataset CSV override");
                sub->add_option("--schema", schema, "schema JSON override");
            }
        }

        RunConfig resolve() const {
            RunConfig cfg;
            if (!config.empty()) cfg = RunConfig::load(config);
            if (cmd->count("--seed")) cfg.seed = seed;
            if (cmd->count("--out")) cfg.out_dir = out;
            if (has_data_flags) {
                if (cmd->count("--dataset")) cfg.dataset = dataset;
                if (cmd->count("--schema")) cfg.schema = schema;
            }
            return cfg;
        }
    };

    Common c_synth, c_embed, c_similarity, c_reduce, c_train, c_evaluate, c_explain, c_pipeline;

    auto* sc_synth = app.add_subcommand("synth", "generate a synthetic reactor dataset");
    c_synth.attach(sc_synth, false);
    std::size_t synth_runs = 0, synth_disks = 0;
    double synth_noise = 0.0;
    std::string synth_catalog;
    sc_synth->add_option("--runs", synth_runs, "number of reactor runs");
    sc_synth->add_option("--disks", synth_disks, "disks per run");
    sc_synth->add_option("--noise", synth_noise, "target noise stddev");
    sc_synth->add_option("--catalog", synth_catalog, "insert catalog CSV");
    sc_synth->callback([&] {
        RunConfig cfg = c_synth.resolve();
        if (sc_synth->count("--runs")) cfg.synth.n_runs = synth_runs;
        if (sc_synth->count("--disks")) cfg.synth.disks_per_run = synth_disks;
        if (sc_synth->count("--noise")) cfg.synth.noise_std = synth_noise;
        if (sc_synth->count("--catalog")) cfg.synth_catalog = synth_catalog;
        cmd_synth(cfg, c_synth.config);
    });

    auto* sc_iso = app.add_subcommand("parse-iso", "decode designation codes");
    std::vector<std::string> iso_codes;
    std::string iso_table, iso_out;
    sc_iso->add_option("codes", iso_codes, "designation codes")->required();
    sc_iso->add_option("--table", iso_table, "code table JSON");
    sc_iso->add_option("--out", iso_out, "output directory (omit to print JSON lines)");
    sc_iso->callback([&] { cmd_parse_iso(iso_codes, iso_table, iso_out); });

    auto* sc_embed = app.add_subcommand("embed", "train description embeddings");
    c_embed.attach(sc_embed, true);
    std::vector<std::string> embed_columns;
    sc_embed->add_option("--column", embed_columns, "text column to draw descriptions from");
    sc_embed->callback([&] { cmd_embed(c_embed.resolve(), c_embed.config, embed_columns); });

    auto* sc_similarity = app.add_subcommand("similarity", "pairwise cosine matrix for a table");
    c_similarity.attach(sc_similarity, false);
    std::string similarity_table;
    sc_similarity->add_option("--table", similarity_table, "embedding table CSV")->required();
    sc_similarity->callback(
        [&] { cmd_similarity(c_similarity.resolve(), similarity_table); });

    auto* sc_reduce = app.add_subcommand("reduce", "project an embedding table to fewer dims");
    c_reduce.attach(sc_reduce, false);
    std::string reduce_table, reduce_method = "pca";
    std::size_t reduce_dim = 3, reduce_neighbors = 0, reduce_epochs = 0;
    double reduce_min_dist = 0.0;
    sc_reduce->add_option("--table", reduce_table, "embedding table CSV")->required();
    sc_reduce->add_option("--method", reduce_method, "pca or umap");
    sc_reduce->add_option("--dim", reduce_dim, "target dimensionality");
    sc_reduce->add_option("--neighbors", reduce_neighbors, "umap neighborhood size");
    sc_reduce->add_option("--min-dist", reduce_min_dist, "umap minimum distance");
    sc_reduce->add_option("--epochs", reduce_epochs, "umap optimization epochs");
    sc_reduce->callback([&] {
        RunConfig cfg = c_reduce.resolve();
        reduce::UmapParams umap = cfg.reduction.umap;
        if (sc_reduce->count("--neighbors")) umap.n_neighbors = reduce_neighbors;
        if (sc_reduce->count("--min-dist")) umap.min_dist = reduce_min_dist;
        if (sc_reduce->count("--epochs")) umap.n_epochs = reduce_epochs;
        cmd_reduce(cfg, reduce_table, reduce_method, reduce_dim, umap);
    });

    auto* sc_train = app.add_subcommand("train", "fit the full pipeline and export the model");
    c_train.attach(sc_train, true);
    sc_train->callback([&] { cmd_train(c_train.resolve(), c_train.config); });

    auto* sc_evaluate = app.add_subcommand("evaluate", "cross-validated learning curves");
    c_evaluate.attach(sc_evaluate, true);
    sc_evaluate->callback([&] { cmd_evaluate(c_evaluate.resolve(), c_evaluate.config); });

    auto* sc_explain = app.add_subcommand("explain", "grouped importance and SHAP reports");
    c_explain.attach(sc_explain, true);
    sc_explain->callback([&] { cmd_explain(c_explain.resolve(), c_explain.config); });

    auto* sc_pipeline = app.add_subcommand("pipeline", "evaluate every configured encoder variant");
    c_pipeline.attach(sc_pipeline, true);
    std::string pipeline_variant;
    sc_pipeline->add_option("--variant", pipeline_variant, "run a single named variant");
    sc_pipeline->callback(
        [&] { cmd_pipeline(c_pipeline.resolve(), c_pipeline.config, pipeline_variant); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error: %s\n", one_line(e.what()).c_str());
        return e.get_exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", one_line(e.what()).c_str());
        return 1;
    }
    return 0;
}

}  // namespace catembed::cli
