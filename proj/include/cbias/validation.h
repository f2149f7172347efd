// Validation tools: WEAT permutation tests, agreement between bias metrics
// and stability of the discovered labels under resampling and parameter
// changes.

#ifndef CBIAS_VALIDATION_H_
#define CBIAS_VALIDATION_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cbias/bias.h"
#include "cbias/pipeline.h"

namespace cbias {

struct WeatResult {
    double statistic = 0.0;
    double effect_size = 0.0;
    double p_value = 1.0;  // one-sided, P(stat >= observed)
    std::uint64_t permutations_used = 0;
    bool exact = false;
    std::vector<std::string> x_used, y_used;
    std::vector<std::string> dropped;  // OOV or trimmed target words
};

constexpr std::uint64_t kDefaultMaxPermutations = 1'000'000;

// Word-embedding association test between targets X, Y and attributes A, B.
// X and Y are filtered to the vocabulary and the longer one trimmed from its
// tail to equal length. The p-value enumerates every balanced repartition of
// X u Y when there are at most max_permutations of them, otherwise samples
// max_permutations repartitions uniformly.
WeatResult weat(const EmbeddingModel &model, const TargetSet &x, const TargetSet &y,
                const TargetSet &a, const TargetSet &b,
                std::uint64_t max_permutations = kDefaultMaxPermutations,
                std::uint64_t seed = 1);

std::string weat_csv_header();
std::string weat_csv_line(std::string_view test, const WeatResult &result);
std::string weat_json(std::string_view test, const WeatResult &result);

// |A n B| / |A u B| over word sets; 1 when both are empty.
double jaccard_topk(std::span<const std::string> a, std::span<const std::string> b);

// Alternative score cos(w, g) with g = normalize(mean(S1) - mean(S2)).
class DirectBiasScorer {
public:
    DirectBiasScorer(const EmbeddingModel &model, const TargetSet &s1, const TargetSet &s2);
    double score(std::size_t word_index) const;

private:
    const EmbeddingModel &model_;
    Vec direction_;
};

BiasRanking direct_bias_rank(const EmbeddingModel &model, const TargetSet &s1,
                             const TargetSet &s2, const PosTagger &tagger,
                             const std::set<PosTag> &allowed, std::size_t k);

struct LabelRankStats {
    std::size_t present = 0;  // runs in which the label has a rank
    double mean_rank = 0.0;
    double variance = 0.0;    // population variance over present runs
};

struct StabilityRun {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t comments = 0;
    LabelRankTable table;
    std::vector<std::string> top1, top2;  // top-10 labels per side
};

struct StabilityReport {
    std::vector<StabilityRun> runs;
    std::map<std::string, LabelRankStats> side1, side2;
    // overlap[i][j] = |top10_i n top10_j|
    std::vector<std::vector<std::size_t>> overlap1, overlap2;
};

// For each run: subsample whole comments, retrain, rank, cluster and label.
// Runs derive their seeds from the given seed. A failing run is reported as
// StageError naming the run index.
StabilityReport bootstrap_stability(const TokenizedCorpus &corpus, const PipelineConfig &config,
                                    const PipelineResources &resources, std::size_t n_runs,
                                    double fraction, std::uint64_t seed);
std::string stability_json(const StabilityReport &report);

struct GranularityCell {
    double r = 0.0;
    std::size_t clusters = 0;
    std::size_t unique_labels = 0;
    double intra_similarity = 0.0;
    // Top-10 labels with their share of clusters.
    std::vector<std::pair<std::string, double>> top;
};

struct GranularityReport {
    std::vector<GranularityCell> cells;
    bool unique_labels_non_decreasing = true;  // reported, not enforced
    std::vector<std::size_t> adjacent_top_overlap;  // cells[i] vs cells[i+1]
};

GranularityReport granularity_sweep(const EmbeddingModel &model,
                                    std::span<const std::string> words,
                                    std::span<const double> r_values,
                                    const SemanticLexicon &lex,
                                    const SentimentLexicon &sentiment, std::uint64_t seed,
                                    TagMode mode = TagMode::kFirstLabel);
std::string granularity_json(const GranularityReport &report);

struct MinCountCell {
    std::uint64_t threshold = 0;
    bool ok = false;
    std::string error;
    std::size_t vocab_size = 0;
    std::size_t tagged_vocab_size = 0;  // words passing the POS filter
    std::vector<std::string> top1, top2;
    std::size_t overlap1 = 0, overlap2 = 0;  // top-10 overlap with the first cell
};

// Retrains at each min-count threshold (ascending) and compares label ranks
// with the first threshold. A threshold that leaves no vocabulary is recorded
// as a failed cell.
std::vector<MinCountCell> min_count_sweep(const TokenizedCorpus &corpus,
                                          std::span<const std::uint64_t> thresholds,
                                          const PipelineConfig &config,
                                          const PipelineResources &resources);
std::string min_count_json(const std::vector<MinCountCell> &cells);

// First n labels of rank_labels.
std::vector<std::string> top_labels(const LabeledPartition &labeled, std::size_t n = 10);
std::size_t overlap_count(std::span<const std::string> a, std::span<const std::string> b);

}  // namespace cbias

#endif  // CBIAS_VALIDATION_H_
