#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "catembed/eval.hpp"
#include "catembed/pipeline.hpp"
#include "catembed/synth.hpp"

namespace catembed::cli {

/// One run's settings, loadable from a JSON config document. Unknown keys are
/// rejected so a typo cannot silently fall back to a default. Command-line
/// flags override individual fields after loading.
struct RunConfig {
    std::filesystem::path dataset;
    std::filesystem::path schema;
    std::map<std::string, pipeline::EncoderChoice> encoders;
    embed::Doc2VecParams doc2vec;
    pipeline::ReductionSpec reduction;
    gbt::GbtParams gbt;
    bool global_embedding_fit = false;
    bool shap_per_column_mean = false;
    eval::BandMode band_mode = eval::BandMode::OneSigma;
    int k_folds = 10;
    std::vector<double> fractions = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";
    /// Named encoder-override sets compared by the pipeline subcommand; each
    /// overlays `encoders`.
    std::map<std::string, std::map<std::string, pipeline::EncoderChoice>> variants;
    /// Generator settings for the synth subcommand. The weights start at the
    /// shipped defaults; a config "weights" object replaces them wholesale.
    synth::SynthParams synth = [] {
        synth::SynthParams p;
        p.effect_weights = synth::default_effect_weights();
        return p;
    }();
    std::filesystem::path synth_catalog;

    static RunConfig load(const std::filesystem::path& path);

    /// Bundles the model settings with a loaded schema. The single master
    /// seed feeds every stage; per-stage streams are derived inside.
    pipeline::PipelineSpec pipeline_spec(tabular::FeatureSchema schema) const;
};

/// Parses argv and dispatches to one subcommand: synth, parse-iso, embed,
/// similarity, reduce, train, evaluate, explain or pipeline. Returns the
/// process exit code; any failure prints one "error: ..." line on stderr.
/// Every subcommand that writes artifacts also writes a manifest.json with
/// input/output content digests and the resolved seed, and never mutates its
/// inputs.
int run(int argc, const char* const* argv);

}  // namespace catembed::cli
