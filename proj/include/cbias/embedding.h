// Vocabulary, dense word vectors and the geometry every other module uses.

#ifndef CBIAS_EMBEDDING_H_
#define CBIAS_EMBEDDING_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cbias/corpus.h"

namespace cbias {

using Vec = std::vector<double>;

// Word <-> index map with corpus frequencies. Indices are dense 0..size()-1.
// Models loaded from word2vec files without a counts sidecar carry count 0.
class Vocabulary {
public:
    Vocabulary() = default;

    // Appends a word; returns false (and leaves the vocabulary unchanged) if
    // the word is already present.
    bool add(std::string word, std::uint64_t count);

    std::size_t size() const { return words_.size(); }
    bool empty() const { return words_.empty(); }
    const std::string &word(std::size_t i) const { return words_[i]; }
    std::uint64_t count(std::size_t i) const { return counts_[i]; }
    const std::vector<std::string> &words() const { return words_; }
    std::optional<std::size_t> find(std::string_view word) const;
    std::uint64_t count_of(std::string_view word) const;
    bool has_counts() const { return has_counts_; }

    std::uint64_t min_count() const { return min_count_; }
    void set_min_count(std::uint64_t m) { min_count_ = m; }

private:
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t min_count_ = 0;
    bool has_counts_ = false;
};

// Exact token counts; keeps tokens with count >= min_count, ordered by
// descending count then lexicographically. Throws ConfigError when nothing
// survives the cutoff.
Vocabulary build_vocab(const TokenizedCorpus &corpus, std::uint64_t min_count);

// |V| x d row-major float matrix plus its vocabulary. Immutable after
// construction.
class EmbeddingModel {
public:
    EmbeddingModel(Vocabulary vocab, std::size_t dim, std::vector<float> matrix);

    const Vocabulary &vocab() const { return vocab_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vocab_.size(); }
    std::span<const float> row(std::size_t i) const {
        return {matrix_.data() + i * dim_, dim_};
    }
    std::span<const float> matrix() const { return matrix_; }

    // Exact lookup, falling back to a case-insensitive match (first word in
    // vocabulary order) for vocabularies with mixed case.
    std::optional<std::size_t> lookup(std::string_view word) const;
    std::optional<std::span<const float>> vector(std::string_view word) const;

    // Stable content hash over words and raw vector bytes.
    std::string hash() const;

private:
    Vocabulary vocab_;
    std::size_t dim_;
    std::vector<float> matrix_;
    std::unordered_map<std::string, std::size_t> lower_index_;
};

double dot(std::span<const float> a, std::span<const float> b);
double norm(std::span<const float> v);
double norm(std::span<const double> v);

// u.v / (|u| |v|). Throws DomainError on dimension mismatch or a zero vector.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const float> u, std::span<const double> v);
double cosine(std::span<const double> u, std::span<const double> v);

struct Centroid {
    Vec vector;
    std::vector<std::string> used;     // in-vocabulary words, input order
    std::vector<std::string> missing;  // out-of-vocabulary words
};

// Unweighted mean of the vectors of the in-vocabulary words. Duplicates count
// as often as they appear. Throws TargetSetError naming the words when none is
// in the vocabulary.
Centroid centroid(const EmbeddingModel &model, std::span<const std::string> words);

enum class VectorFormat { kText, kBinary };
VectorFormat parse_vector_format(std::string_view name);

// word2vec formats. Text: header "count dim" then "word v1 ... vd" lines.
// Binary: same header, then per word "word " followed by d little-endian
// IEEE-754 floats and a newline. save_embeddings also writes "<path>.vocab"
// (word<TAB>count) when the vocabulary carries counts; load_embeddings reads
// it back if present.
void save_embeddings(const EmbeddingModel &model, const std::filesystem::path &path,
                     VectorFormat format);
EmbeddingModel load_embeddings(const std::filesystem::path &path, VectorFormat format);

struct TrainConfig {
    std::size_t dim = 200;
    std::size_t window = 4;
    std::uint64_t min_count = 10;
    std::size_t epochs = 5;
    std::size_t negatives = 5;
    double alpha = 0.025;       // initial learning rate
    double min_alpha = 1e-4;    // learning rate at the end of training
    double subsample = 0.0;     // frequent-word downsampling threshold; 0 = off
    std::uint64_t seed = 1;
    std::size_t workers = 1;

    void validate() const;
};

// Skip-gram with negative sampling (unigram^0.75 noise, linearly decaying
// learning rate). With workers == 1 the result is a pure function of
// (corpus, cfg). With more workers the matrix is updated concurrently without
// locking and results vary between runs.
EmbeddingModel train_skipgram(const TokenizedCorpus &corpus, const TrainConfig &cfg);

}  // namespace cbias

#endif  // CBIAS_EMBEDDING_H_
