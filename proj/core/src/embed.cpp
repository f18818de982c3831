#include "catembed/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>

#include "catembed/csv.hpp"
#include "catembed/log.hpp"
#include "catembed/rng.hpp"

namespace catembed::embed {

std::vector<std::string> preprocess(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

void Corpus::validate() const {
    std::set<std::string> seen;
    for (const auto& doc : documents) {
        if (doc.tag.empty()) throw std::invalid_argument("corpus: empty document tag");
        if (!seen.insert(doc.tag).second)
            throw std::invalid_argument("corpus: duplicate document tag '" + doc.tag + "'");
    }
}

Corpus Corpus::from_texts(std::span<const std::pair<std::string, std::string>> tag_and_text) {
    Corpus corpus;
    corpus.documents.reserve(tag_and_text.size());
    for (const auto& [tag, text] : tag_and_text)
        corpus.documents.push_back({tag, preprocess(text)});
    corpus.validate();
    return corpus;
}

std::optional<std::size_t> Doc2VecModel::doc_index(const std::string& tag) const {
    for (std::size_t i = 0; i < doc_tags.size(); ++i)
        if (doc_tags[i] == tag) return i;
    return std::nullopt;
}

namespace {

// log(sigmoid(x)) without overflow on either tail.
double log_sigmoid(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Noise distribution for negative sampling: unigram counts raised to 3/4,
// drawn through the cumulative table with binary search.
struct NoiseTable {
    std::vector<double> cdf;

    explicit NoiseTable(const std::vector<double>& counts) {
        cdf.resize(counts.size());
        double total = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            total += std::pow(counts[i], 0.75);
            cdf[i] = total;
        }
    }

    std::size_t sample(Rng& rng) const {
        const double u = rng.uniform() * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    }
};

double decayed_rate(const Doc2VecParams& params, int epoch) {
    constexpr double kFloor = 1e-4;
    if (params.epochs <= 1) return std::max(params.learning_rate, kFloor);
    const double t = static_cast<double>(epoch) / static_cast<double>(params.epochs - 1);
    return std::max(params.learning_rate - (params.learning_rate - kFloor) * t, kFloor);
}

// One PV-DBOW training pair: pull doc towards the observed word, push it
// away from sampled noise words. Word vectors stay frozen when train_words
// is false (inference against a fitted model).
double train_pair(std::span<double> doc_vec, Matrix& word_vectors,
                  std::size_t target_word, const NoiseTable& noise,
                  int negative_samples, double lr, Rng& rng, bool train_words) {
    const std::size_t dim = doc_vec.size();
    std::vector<double> doc_grad(dim, 0.0);
    double loss = 0.0;
    for (int k = 0; k <= negative_samples; ++k) {
        std::size_t word;
        double label;
        if (k == 0) {
            word = target_word;
            label = 1.0;
        } else {
            word = noise.sample(rng);
            if (word == target_word) continue;
            label = 0.0;
        }
        auto w = word_vectors.row(word);
        double score = 0.0;
        for (std::size_t j = 0; j < dim; ++j) score += doc_vec[j] * w[j];
        loss -= label == 1.0 ? log_sigmoid(score) : log_sigmoid(-score);
        const double g = sigmoid(score) - label;
        for (std::size_t j = 0; j < dim; ++j) doc_grad[j] += g * w[j];
        if (train_words)
            for (std::size_t j = 0; j < dim; ++j) w[j] -= lr * g * doc_vec[j];
    }
    for (std::size_t j = 0; j < dim; ++j) doc_vec[j] -= lr * doc_grad[j];
    return loss;
}

}  // namespace

Doc2VecModel train_doc2vec(const Corpus& corpus, const Doc2VecParams& params) {
    corpus.validate();
    if (params.vector_size < 1) throw std::invalid_argument("doc2vec: vector_size must be >= 1");
    if (params.epochs < 1) throw std::invalid_argument("doc2vec: epochs must be >= 1");
    if (params.min_count < 1) throw std::invalid_argument("doc2vec: min_count must be >= 1");
    if (params.negative_samples < 1)
        throw std::invalid_argument("doc2vec: negative_samples must be >= 1");
    if (corpus.documents.empty()) throw std::invalid_argument("doc2vec: empty corpus");

    Doc2VecModel model;
    model.params = params;

    // Vocabulary keeps first-appearance order so index assignment is stable
    // across runs regardless of hash-map iteration order.
    std::map<std::string, std::size_t> counts_by_word;
    std::vector<std::string> appearance;
    for (const auto& doc : corpus.documents) {
        for (const auto& tok : doc.tokens) {
            auto [it, inserted] = counts_by_word.emplace(tok, 0);
            if (inserted) appearance.push_back(tok);
            ++it->second;
        }
    }
    for (const auto& word : appearance) {
        const std::size_t c = counts_by_word[word];
        if (c < static_cast<std::size_t>(params.min_count)) continue;
        model.vocabulary.emplace(word, static_cast<int>(model.vocab_words.size()));
        model.vocab_words.push_back(word);
        model.vocab_counts.push_back(static_cast<double>(c));
    }

    const std::size_t dim = static_cast<std::size_t>(params.vector_size);
    const std::size_t n_docs = corpus.documents.size();
    model.doc_tags.reserve(n_docs);
    for (const auto& doc : corpus.documents) model.doc_tags.push_back(doc.tag);

    Rng rng(derive_seed(params.seed, "doc2vec-init"));
    model.doc_vectors = Matrix(n_docs, dim);
    const double half = 0.5 / static_cast<double>(dim);
    for (std::size_t i = 0; i < n_docs; ++i)
        for (std::size_t j = 0; j < dim; ++j) model.doc_vectors(i, j) = rng.uniform(-half, half);
    // Output weights start at zero, matching the usual negative-sampling setup.
    model.word_vectors = Matrix(model.vocab_words.size(), dim);

    // Token stream restricted to in-vocabulary words, resolved once.
    std::vector<std::vector<int>> doc_words(n_docs);
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i < n_docs; ++i) {
        for (const auto& tok : corpus.documents[i].tokens) {
            auto it = model.vocabulary.find(tok);
            if (it == model.vocabulary.end()) continue;
            doc_words[i].push_back(it->second);
            ++n_pairs;
        }
    }
    if (n_pairs == 0) {
        logging::warn("doc2vec: no in-vocabulary tokens, document vectors left at initialization");
        model.epoch_loss.assign(params.epochs, 0.0);
        return model;
    }

    const NoiseTable noise(model.vocab_counts);
    Rng train_rng(derive_seed(params.seed, "doc2vec-train"));
    model.epoch_loss.reserve(params.epochs);
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        const double lr = decayed_rate(params, epoch);
        double total_loss = 0.0;
        for (std::size_t i = 0; i < n_docs; ++i) {
            auto doc_vec = model.doc_vectors.row(i);
            for (int word : doc_words[i]) {
                total_loss += train_pair(doc_vec, model.word_vectors,
                                         static_cast<std::size_t>(word), noise,
                                         params.negative_samples, lr, train_rng,
                                         /*train_words=*/true);
            }
        }
        model.epoch_loss.push_back(total_loss / static_cast<double>(n_pairs));
    }
    return model;
}

std::vector<double> infer_vector(const Doc2VecModel& model,
                                 std::span<const std::string> tokens) {
    const std::size_t dim = static_cast<std::size_t>(model.params.vector_size);
    std::vector<int> words;
    std::string joined;
    for (const auto& tok : tokens) {
        joined += tok;
        joined += '\x1f';
        auto it = model.vocabulary.find(tok);
        if (it != model.vocabulary.end()) words.push_back(it->second);
    }
    if (words.empty()) {
        logging::warn("doc2vec: no known tokens to infer from, returning zero vector");
        return std::vector<double>(dim, 0.0);
    }

    // Seeded off the token content so the same description always lands on
    // the same vector, independent of call order.
    Rng rng(derive_seed(model.params.seed, "doc2vec-infer", fnv1a64(joined)));
    const double half = 0.5 / static_cast<double>(dim);
    std::vector<double> vec(dim);
    for (std::size_t j = 0; j < dim; ++j) vec[j] = rng.uniform(-half, half);

    const NoiseTable noise(model.vocab_counts);
    Matrix frozen = model.word_vectors;
    for (int epoch = 0; epoch < model.params.epochs; ++epoch) {
        const double lr = decayed_rate(model.params, epoch);
        for (int word : words) {
            train_pair(std::span<double>(vec.data(), dim), frozen,
                       static_cast<std::size_t>(word), noise,
                       model.params.negative_samples, lr, rng,
                       /*train_words=*/false);
        }
    }
    return vec;
}

std::optional<std::size_t> EmbeddingTable::index_of(const std::string& description) const {
    if (index_.size() != descriptions.size()) rebuild_index();
    auto it = index_.find(description);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingTable::rebuild_index() const {
    index_.clear();
    for (std::size_t i = 0; i < descriptions.size(); ++i) index_.emplace(descriptions[i], i);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    const csv::Table table = csv::read_file(path);
    if (table.header.empty() || table.header[0] != "description")
        throw std::runtime_error("embedding table " + path.string() +
                                 ": first header column must be 'description'");
    const std::size_t dim = table.header.size() - 1;
    if (dim == 0)
        throw std::runtime_error("embedding table " + path.string() + ": no vector columns");
    for (std::size_t j = 0; j < dim; ++j) {
        const std::string expected = "d" + std::to_string(j);
        if (table.header[j + 1] != expected)
            throw std::runtime_error("embedding table " + path.string() + ": header column " +
                                     std::to_string(j + 1) + " must be '" + expected + "', got '" +
                                     table.header[j + 1] + "'");
    }

    EmbeddingTable out;
    out.dimension = dim;
    out.source = path.string();
    out.vectors = Matrix(table.rows.size(), dim);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != dim + 1)
            throw std::runtime_error("embedding table " + path.string() + ": row " +
                                     std::to_string(i + 2) + " has " + std::to_string(row.size()) +
                                     " fields, expected " + std::to_string(dim + 1));
        if (!seen.insert(row[0]).second)
            throw std::runtime_error("embedding table " + path.string() +
                                     ": duplicate description '" + row[0] + "'");
        out.descriptions.push_back(row[0]);
        for (std::size_t j = 0; j < dim; ++j) {
            const std::string& field = row[j + 1];
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0' || !std::isfinite(v))
                throw std::runtime_error("embedding table " + path.string() + ": row " +
                                         std::to_string(i + 2) + " column d" + std::to_string(j) +
                                         ": cannot parse '" + field + "' as a finite number");
            out.vectors(i, j) = v;
        }
    }
    return out;
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
    csv::Table table;
    table.header.push_back("description");
    for (std::size_t j = 0; j < dimension; ++j) table.header.push_back("d" + std::to_string(j));
    table.rows.reserve(descriptions.size());
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
        std::vector<std::string> row;
        row.reserve(dimension + 1);
        row.push_back(descriptions[i]);
        for (std::size_t j = 0; j < dimension; ++j) row.push_back(csv::format_double(vectors(i, j)));
        table.rows.push_back(std::move(row));
    }
    csv::write_file(path, table);
}

EmbeddingTable EmbeddingTable::from_doc2vec(const Doc2VecModel& model, std::string source_label) {
    EmbeddingTable out;
    out.descriptions = model.doc_tags;
    out.vectors = model.doc_vectors;
    out.dimension = static_cast<std::size_t>(model.params.vector_size);
    out.source = std::move(source_label);
    return out;
}

tabular::ColumnBlock embed_column(std::span<const std::string> descriptions,
                                  const EmbeddingTable& table,
                                  const std::string& group,
                                  const Doc2VecModel* fallback_model) {
    if (table.dimension == 0) throw std::invalid_argument("embed_column: empty embedding table");
    tabular::ColumnBlock block;
    block.group = group;
    for (std::size_t j = 0; j < table.dimension; ++j) {
        block.names.push_back(group + "_d" + std::to_string(j));
        block.columns.emplace_back(descriptions.size(), 0.0);
    }
    for (std::size_t i = 0; i < descriptions.size(); ++i) {
        const auto idx = table.index_of(descriptions[i]);
        if (idx) {
            auto vec = table.vector_of(*idx);
            for (std::size_t j = 0; j < table.dimension; ++j) block.columns[j][i] = vec[j];
            continue;
        }
        if (!fallback_model)
            throw std::runtime_error("embed_column: description '" + descriptions[i] +
                                     "' missing from embedding table (source: " + table.source +
                                     ")");
        const auto tokens = preprocess(descriptions[i]);
        const auto vec = infer_vector(*fallback_model, tokens);
        if (vec.size() != table.dimension)
            throw std::runtime_error("embed_column: fallback model dimension mismatch");
        for (std::size_t j = 0; j < table.dimension; ++j) block.columns[j][i] = vec[j];
    }
    return block;
}

}  // namespace catembed::embed
