// Slow, straightforward reference implementations used to check the library.
// They share no code with src/ beyond the data types.

#ifndef CBIAS_TESTS_ORACLES_H_
#define CBIAS_TESTS_ORACLES_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cbias/bias.h"
#include "cbias/embedding.h"
#include "cbias/label.h"
#include "cbias/util.h"

namespace cbias::testing {

// Words "w0", "w1", ... with Gaussian-ish components and random counts in
// [1, 20] (so frequency ties occur).
EmbeddingModel random_model(Rng &rng, std::size_t n_words, std::size_t dim);

// Like random_model, but components are multiples of 1/256 in [-1, 1), so a
// product with exact_scale() is exactly representable as a float.
EmbeddingModel quantized_model(Rng &rng, std::size_t n_words, std::size_t dim);
// Positive factor m / 2^e with m < 1024.
float exact_scale(Rng &rng);
// Copy of the model with one row multiplied by alpha.
EmbeddingModel scale_row(const EmbeddingModel &model, std::size_t row, float alpha);

// Vector with components uniform in [-1, 1).
std::vector<double> random_vector(Rng &rng, std::size_t dim);

double oracle_cosine(const std::vector<double> &a, const std::vector<double> &b);
std::vector<double> oracle_row(const EmbeddingModel &model, const std::string &word);
std::vector<double> oracle_mean(const EmbeddingModel &model, const std::vector<std::string> &words);

double oracle_bias(const EmbeddingModel &model, const std::string &word,
                   const std::vector<std::string> &s1, const std::vector<std::string> &s2);
double oracle_direct_bias(const EmbeddingModel &model, const std::string &word,
                          const std::vector<std::string> &s1, const std::vector<std::string> &s2);

enum class OracleScore { kCentroid, kDirect };

// Scores every vocabulary word, drops targets and disallowed tags, sorts the
// whole list and keeps the first k.
std::vector<std::pair<std::string, double>> oracle_ranking(
    const EmbeddingModel &model, const std::vector<std::string> &s1,
    const std::vector<std::string> &s2, const std::map<std::string, PosTag> &tags,
    const std::set<PosTag> &allowed, std::size_t k, OracleScore kind);

double oracle_mean_sentiment(const std::map<std::string, double> &lex,
                             const std::vector<std::string> &words);

struct OracleLabelRank {
    std::string label;
    std::size_t rank, clusters, words;
};
std::vector<OracleLabelRank> oracle_label_ranks(const LabeledPartition &labeled);

struct OracleWeat {
    double statistic;
    double p_value;
    std::size_t partitions;
};
// Enumerates all balanced splits of X u Y by bitmask (|X u Y| <= 20).
OracleWeat oracle_weat(const EmbeddingModel &model, const std::vector<std::string> &x,
                       const std::vector<std::string> &y, const std::vector<std::string> &a,
                       const std::vector<std::string> &b);

}  // namespace cbias::testing

#endif  // CBIAS_TESTS_ORACLES_H_
