#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "catembed/matrix.hpp"
#include "catembed/tabular.hpp"

namespace catembed::embed {

/// Lowercases, strips punctuation and special characters, splits on
/// whitespace. Never yields an empty token.
std::vector<std::string> preprocess(std::string_view text);

struct TaggedDocument {
    std::string tag;
    std::vector<std::string> tokens;
};

struct Corpus {
    std::vector<TaggedDocument> documents;

    /// Tags must be unique; tokens are expected preprocessed.
    void validate() const;
    static Corpus from_texts(std::span<const std::pair<std::string, std::string>> tag_and_text);
};

struct Doc2VecParams {
    int vector_size = 3;
    int min_count = 1;
    int epochs = 2000;
    double learning_rate = 0.025;  // linearly decayed to 1e-4
    int negative_samples = 5;
    std::uint64_t seed = 1;
};

/// Distributed bag-of-words paragraph vectors trained with negative sampling.
/// Training is single threaded and fully determined by the seed.
struct Doc2VecModel {
    std::vector<std::string> vocab_words;            // index -> word
    std::unordered_map<std::string, int> vocabulary; // word -> index
    std::vector<double> vocab_counts;                // corpus frequency per word
    Matrix word_vectors;                             // vocab x dim (output weights)
    std::vector<std::string> doc_tags;
    Matrix doc_vectors;                              // docs x dim
    Doc2VecParams params;
    std::vector<double> epoch_loss;                  // mean negative-sampling loss per epoch

    std::optional<std::size_t> doc_index(const std::string& tag) const;
};

Doc2VecModel train_doc2vec(const Corpus& corpus, const Doc2VecParams& params);

/// Gradient-refines a fresh document vector against frozen word vectors.
/// Tokens with no vocabulary hit yield a zero vector and a warning.
std::vector<double> infer_vector(const Doc2VecModel& model,
                                 std::span<const std::string> tokens);

/// description -> dense vector, fixed dimension. The file format is CSV with
/// header description,d0,...,d{n-1}; descriptions are exact-match keys.
struct EmbeddingTable {
    std::vector<std::string> descriptions;
    Matrix vectors;  // entries x dimension
    std::size_t dimension = 0;
    std::string source;

    std::optional<std::size_t> index_of(const std::string& description) const;
    std::span<const double> vector_of(std::size_t index) const { return vectors.row(index); }

    static EmbeddingTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Builds a table from the model's trained document vectors, tag = key.
    static EmbeddingTable from_doc2vec(const Doc2VecModel& model, std::string source_label);

private:
    mutable std::unordered_map<std::string, std::size_t> index_;
    void rebuild_index() const;
};

/// Expands a per-row description sequence into `dimension` numeric columns
/// sharing one group label. With a table, every description must be present;
/// with a model, unseen descriptions fall back to infer_vector.
tabular::ColumnBlock embed_column(std::span<const std::string> descriptions,
                                  const EmbeddingTable& table,
                                  const std::string& group,
                                  const Doc2VecModel* fallback_model = nullptr);

}  // namespace catembed::embed
