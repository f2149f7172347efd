#include "cbias/embedding.h"

#include <algorithm>
#include <cmath>

#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

bool Vocabulary::add(std::string word, std::uint64_t count) {
    if (index_.count(word)) return false;
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    counts_.push_back(count);
    if (count > 0) has_counts_ = true;
    return true;
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t Vocabulary::count_of(std::string_view word) const {
    auto i = find(word);
    return i ? counts_[*i] : 0;
}

Vocabulary build_vocab(const TokenizedCorpus &corpus, std::uint64_t min_count) {
    if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto &sentence : corpus.sentences()) {
        for (const auto &token : sentence) ++counts[token];
    }
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto &[word, count] : counts) {
        if (count >= min_count) kept.emplace_back(word, count);
    }
    if (kept.empty()) {
        throw ConfigError("vocabulary is empty after applying min_count=" +
                          std::to_string(min_count));
    }
    std::sort(kept.begin(), kept.end(), [](const auto &a, const auto &b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary vocab;
    for (auto &[word, count] : kept) vocab.add(std::move(word), count);
    vocab.set_min_count(min_count);
    return vocab;
}

EmbeddingModel::EmbeddingModel(Vocabulary vocab, std::size_t dim,
                               std::vector<float> matrix)
    : vocab_(std::move(vocab)), dim_(dim), matrix_(std::move(matrix)) {
    if (dim_ == 0) throw ArgumentError("embedding dimension must be positive");
    if (matrix_.size() != vocab_.size() * dim_) {
        throw ArgumentError("matrix size does not match vocabulary x dimension");
    }
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        lower_index_.try_emplace(to_lower(vocab_.word(i)), i);
    }
}

std::optional<std::size_t> EmbeddingModel::lookup(std::string_view word) const {
    if (auto i = vocab_.find(word)) return i;
    auto it = lower_index_.find(to_lower(word));
    if (it == lower_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::span<const float>> EmbeddingModel::vector(std::string_view word) const {
    auto i = lookup(word);
    if (!i) return std::nullopt;
    return row(*i);
}

std::string EmbeddingModel::hash() const {
    Fnv1a h;
    h.update(std::to_string(dim_));
    for (const auto &w : vocab_.words()) {
        h.update(w);
        h.update(std::string_view("\n"));
    }
    h.update(std::as_bytes(std::span(matrix_)));
    return h.hex();
}

namespace {

// Several partial sums let the compiler vectorize without reassociating a
// single float accumulator.
template <class A, class B>
double dot_impl(std::span<const A> a, std::span<const B> b) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t n = a.size(), i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += static_cast<double>(a[i]) * b[i];
        s1 += static_cast<double>(a[i + 1]) * b[i + 1];
        s2 += static_cast<double>(a[i + 2]) * b[i + 2];
        s3 += static_cast<double>(a[i + 3]) * b[i + 3];
    }
    for (; i < n; ++i) s0 += static_cast<double>(a[i]) * b[i];
    return (s0 + s1) + (s2 + s3);
}

template <class A, class B>
double cosine_impl(std::span<const A> u, std::span<const B> v) {
    if (u.size() != v.size()) {
        throw DomainError("cosine of vectors with different dimensions");
    }
    double nu = std::sqrt(dot_impl(u, u));
    double nv = std::sqrt(dot_impl(v, v));
    if (nu == 0.0 || nv == 0.0) throw DomainError("cosine of a zero vector");
    double c = dot_impl(u, v) / (nu * nv);
    return std::clamp(c, -1.0, 1.0);
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) { return dot_impl(a, b); }
double norm(std::span<const float> v) { return std::sqrt(dot_impl(v, v)); }
double norm(std::span<const double> v) { return std::sqrt(dot_impl(v, v)); }

double cosine(std::span<const float> u, std::span<const float> v) {
    return cosine_impl(u, v);
}
double cosine(std::span<const float> u, std::span<const double> v) {
    return cosine_impl(u, v);
}
double cosine(std::span<const double> u, std::span<const double> v) {
    return cosine_impl(u, v);
}

Centroid centroid(const EmbeddingModel &model, std::span<const std::string> words) {
    Centroid c;
    c.vector.assign(model.dim(), 0.0);
    for (const auto &w : words) {
        auto v = model.vector(w);
        if (!v) {
            c.missing.push_back(w);
            continue;
        }
        c.used.push_back(w);
        for (std::size_t j = 0; j < model.dim(); ++j) c.vector[j] += (*v)[j];
    }
    if (c.used.empty()) {
        std::string names;
        for (const auto &w : c.missing) names += (names.empty() ? "" : ", ") + w;
        throw TargetSetError("no target word in vocabulary: " + names);
    }
    const double n = static_cast<double>(c.used.size());
    for (double &x : c.vector) x /= n;
    return c;
}

}  // namespace cbias
