#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

#include "cbias/embedding.h"
#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

void TrainConfig::validate() const {
    if (dim == 0 || window == 0 || epochs == 0 || negatives == 0 || workers == 0) {
        throw ConfigError("dim, window, epochs, negatives and workers must be positive");
    }
    if (!(alpha > 0.0) || !(min_alpha > 0.0) || min_alpha > alpha) {
        throw ConfigError("learning rates must satisfy 0 < min_alpha <= alpha");
    }
    if (subsample < 0.0) throw ConfigError("subsample threshold must be >= 0");
}

namespace {

constexpr double kMaxExp = 6.0;
constexpr std::size_t kNoiseTableSize = 1'000'000;

// Float dot product with independent lanes so it vectorizes without
// -ffast-math. Training precision matches the float storage.
float fast_dot(const float *__restrict a, const float *__restrict b, std::size_t n) {
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
    }
    float s = 0;
    for (; i < n; ++i) s += a[i] * b[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + s;
}

// Maps corpus sentences to vocabulary indices once, dropping OOV tokens.
std::vector<std::vector<std::uint32_t>> encode(const TokenizedCorpus &corpus,
                                               const Vocabulary &vocab) {
    std::vector<std::vector<std::uint32_t>> encoded;
    encoded.reserve(corpus.sentences().size());
    for (const auto &sentence : corpus.sentences()) {
        std::vector<std::uint32_t> ids;
        ids.reserve(sentence.size());
        for (const auto &t : sentence) {
            if (auto i = vocab.find(t)) ids.push_back(static_cast<std::uint32_t>(*i));
        }
        if (!ids.empty()) encoded.push_back(std::move(ids));
    }
    return encoded;
}

// Word indices laid out proportionally to count^0.75.
std::vector<std::uint32_t> noise_table(const Vocabulary &vocab) {
    std::vector<double> weights(vocab.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        weights[i] = std::pow(static_cast<double>(vocab.count(i)), 0.75);
        total += weights[i];
    }
    std::vector<std::uint32_t> table(kNoiseTableSize);
    std::size_t word = 0;
    double cumulative = weights[0] / total;
    for (std::size_t a = 0; a < kNoiseTableSize; ++a) {
        table[a] = static_cast<std::uint32_t>(word);
        if (static_cast<double>(a + 1) / kNoiseTableSize > cumulative &&
            word + 1 < vocab.size()) {
            ++word;
            cumulative += weights[word] / total;
        }
    }
    return table;
}

struct Shared {
    std::vector<float> input;    // word vectors, the model output
    std::vector<float> output;   // context ("negative") vectors
    std::atomic<std::uint64_t> processed{0};
};

class Worker {
public:
    Worker(const TrainConfig &cfg, const Vocabulary &vocab,
           const std::vector<std::uint32_t> &table, std::uint64_t total_words,
           Shared &shared, std::uint64_t seed)
        : cfg_(cfg), vocab_(vocab), table_(table), total_words_(total_words),
          shared_(shared), rng_(seed), grad_(cfg.dim) {
        if (cfg.subsample > 0.0) {
            std::uint64_t train_words = 0;
            for (std::size_t i = 0; i < vocab.size(); ++i) train_words += vocab.count(i);
            keep_.resize(vocab.size());
            const double threshold = cfg.subsample * static_cast<double>(train_words);
            for (std::size_t i = 0; i < vocab.size(); ++i) {
                double f = static_cast<double>(vocab.count(i));
                keep_[i] = (std::sqrt(f / threshold) + 1.0) * threshold / f;
            }
        }
    }

    void run(std::span<const std::vector<std::uint32_t>> sentences) {
        const double span_words = static_cast<double>(total_words_ * cfg_.epochs);
        std::vector<std::uint32_t> kept;
        for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
            for (const auto &sentence : sentences) {
                std::uint64_t done = shared_.processed.fetch_add(
                    sentence.size(), std::memory_order_relaxed);
                double progress = static_cast<double>(done) / span_words;
                alpha_ = std::max(cfg_.min_alpha,
                                  cfg_.alpha - (cfg_.alpha - cfg_.min_alpha) * progress);
                const std::vector<std::uint32_t> *words = &sentence;
                if (!keep_.empty()) {
                    kept.clear();
                    for (auto w : sentence) {
                        if (keep_[w] >= rng_.uniform()) kept.push_back(w);
                    }
                    words = &kept;
                }
                train_sentence(*words);
            }
        }
    }

private:
    void train_sentence(const std::vector<std::uint32_t> &words) {
        const std::size_t n = words.size();
        for (std::size_t pos = 0; pos < n; ++pos) {
            // Effective window drawn uniformly from 1..window.
            const std::size_t reduced = rng_.below(cfg_.window);
            const std::size_t reach = cfg_.window - reduced;
            const std::size_t lo = pos >= reach ? pos - reach : 0;
            const std::size_t hi = std::min(n - 1, pos + reach);
            for (std::size_t c = lo; c <= hi; ++c) {
                if (c == pos) continue;
                train_pair(words[pos], words[c]);
            }
        }
    }

    // One SGNS update: the context word's input vector is pulled toward the
    // centre word's output vector and pushed away from sampled noise words.
    void train_pair(std::uint32_t centre, std::uint32_t context) {
        const std::size_t d = cfg_.dim;
        float *__restrict in = shared_.input.data() + static_cast<std::size_t>(context) * d;
        float *__restrict grad = grad_.data();
        std::fill(grad_.begin(), grad_.end(), 0.0f);
        for (std::size_t k = 0; k <= cfg_.negatives; ++k) {
            std::uint32_t target;
            float label;
            if (k == 0) {
                target = centre;
                label = 1.0f;
            } else {
                target = table_[rng_.below(table_.size())];
                if (target == centre) continue;
                label = 0.0f;
            }
            float *__restrict out = shared_.output.data() + static_cast<std::size_t>(target) * d;
            double f = fast_dot(in, out, d);
            double g;
            if (f > kMaxExp) {
                g = (label - 1.0) * alpha_;
            } else if (f < -kMaxExp) {
                g = label * alpha_;
            } else {
                g = (label - 1.0 / (1.0 + std::exp(-f))) * alpha_;
            }
            const float gf = static_cast<float>(g);
            for (std::size_t j = 0; j < d; ++j) grad[j] += gf * out[j];
            for (std::size_t j = 0; j < d; ++j) out[j] += gf * in[j];
        }
        for (std::size_t j = 0; j < d; ++j) in[j] += grad[j];
    }

    const TrainConfig &cfg_;
    const Vocabulary &vocab_;
    const std::vector<std::uint32_t> &table_;
    std::uint64_t total_words_;
    Shared &shared_;
    Rng rng_;
    std::vector<float> grad_;
    std::vector<double> keep_;
    double alpha_ = 0.0;
};

}  // namespace

EmbeddingModel train_skipgram(const TokenizedCorpus &corpus, const TrainConfig &cfg) {
    cfg.validate();
    Vocabulary vocab = build_vocab(corpus, cfg.min_count);
    auto sentences = encode(corpus, vocab);
    std::uint64_t total_words = 0;
    for (const auto &s : sentences) total_words += s.size();
    if (total_words < cfg.window + 1) {
        throw ConfigError("corpus is shorter than one training window (window=" +
                          std::to_string(cfg.window) + ")");
    }

    const std::size_t d = cfg.dim;
    Shared shared;
    shared.input.resize(vocab.size() * d);
    shared.output.assign(vocab.size() * d, 0.0f);
    Rng init(derive_seed(cfg.seed, 0));
    for (float &x : shared.input) {
        x = static_cast<float>((init.uniform() - 0.5) / static_cast<double>(d));
    }
    const auto table = noise_table(vocab);

    if (cfg.workers == 1) {
        Worker worker(cfg, vocab, table, total_words, shared, derive_seed(cfg.seed, 1));
        worker.run(sentences);
    } else {
        // Lock-free concurrent updates of the shared matrices; each worker
        // owns a contiguous slice of sentences.
        std::vector<std::thread> threads;
        const std::size_t chunk = (sentences.size() + cfg.workers - 1) / cfg.workers;
        for (std::size_t t = 0; t < cfg.workers; ++t) {
            std::size_t begin = std::min(sentences.size(), t * chunk);
            std::size_t end = std::min(sentences.size(), begin + chunk);
            threads.emplace_back([&, t, begin, end] {
                Worker worker(cfg, vocab, table, total_words, shared,
                              derive_seed(cfg.seed, t + 1));
                worker.run(std::span(sentences).subspan(begin, end - begin));
            });
        }
        for (auto &th : threads) th.join();
    }

    for (std::size_t i = 0; i < vocab.size(); ++i) {
        std::span<const float> row(shared.input.data() + i * d, d);
        for (float x : row) {
            if (!std::isfinite(x)) throw Error("training diverged (non-finite weights)");
        }
        if (norm(row) == 0.0) {
            throw Error("training produced a zero vector for '" + vocab.word(i) + "'");
        }
    }
    spdlog::debug("trained {} words x {} dims over {} tokens", vocab.size(), d, total_words);
    return EmbeddingModel(std::move(vocab), d, std::move(shared.input));
}

}  // namespace cbias
