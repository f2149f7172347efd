// Centroid-cosine bias scores and most-biased word rankings.
//
//   bias(w, S1, S2) = cos(w, mean(S1)) - cos(w, mean(S2))
//
// Positive scores lean toward S1. Rankings exclude the target words
// themselves and keep only words whose part-of-speech tag is allowed.

#ifndef CBIAS_BIAS_H_
#define CBIAS_BIAS_H_

#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cbias/embedding.h"

namespace cbias {

struct TargetSet {
    std::string name;
    std::vector<std::string> words;  // lowercase, distinct, non-empty

    // Lowercases and de-duplicates the words. Throws ArgumentError when the
    // resulting list is empty.
    static TargetSet make(std::string name, std::vector<std::string> words);
};

// JSON {"name": ..., "words": [...]}.
TargetSet load_target_set(const std::filesystem::path &path);
std::string target_set_json(const TargetSet &set);

enum class PosTag { kNoun, kAdjective, kVerb, kOther };

PosTag parse_pos_tag(std::string_view name);
std::string_view to_string(PosTag tag);
// Parses "adjective,noun" style lists. Empty input gives an empty set.
std::set<PosTag> parse_pos_tags(std::string_view list);
std::string to_string(const std::set<PosTag> &tags);

// Tags isolated words (no sentence context).
class PosTagger {
public:
    virtual ~PosTagger() = default;
    virtual PosTag tag(std::string_view word) const = 0;
};

// Unigram lexicon with suffix-rule fallback for unknown words.
class PosLexicon : public PosTagger {
public:
    PosLexicon() = default;

    void add_word(std::string word, PosTag tag);
    // Rules are kept ordered longest suffix first (stable for equal lengths).
    void add_suffix_rule(std::string suffix, PosTag tag);

    PosTag tag(std::string_view word) const override;
    std::optional<PosTag> lexicon_tag(std::string_view word) const;

    std::size_t size() const { return words_.size(); }
    const std::vector<std::pair<std::string, PosTag>> &suffix_rules() const {
        return rules_;
    }

    // TSV "word<TAB>tag" and "suffix<TAB>tag". The suffix file is optional.
    static PosLexicon load(const std::filesystem::path &lexicon,
                           const std::filesystem::path &suffix_rules = {});

private:
    std::unordered_map<std::string, PosTag> words_;
    std::vector<std::pair<std::string, PosTag>> rules_;
};

// Lexicon tag if present, else the first matching suffix rule, else other.
PosTag pos_tag(const PosTagger &tagger, std::string_view word);

// Precomputed centroids for repeated scoring against one target pair.
class BiasScorer {
public:
    BiasScorer(const EmbeddingModel &model, const TargetSet &s1, const TargetSet &s2);

    double score(std::size_t word_index) const;
    double score(std::string_view word) const;  // throws LookupError if OOV

    const Centroid &centroid1() const { return c1_; }
    const Centroid &centroid2() const { return c2_; }

private:
    const EmbeddingModel &model_;
    Centroid c1_, c2_;
};

double bias_score(const EmbeddingModel &model, std::string_view word,
                  const TargetSet &s1, const TargetSet &s2);

struct BiasEntry {
    std::string word;
    double bias = 0.0;
    std::uint64_t frequency = 0;
};

struct BiasRanking {
    std::vector<BiasEntry> entries;  // non-increasing in bias
    std::string target;              // favoured set
    std::string contrast;
    std::set<PosTag> pos_filter;     // empty = no filtering
    std::size_t k = 0;
    bool truncated = false;          // fewer than k candidates were available
    std::vector<std::string> missing_targets;

    std::vector<std::string> words() const;
};

// Generic top-k ranking over the vocabulary with the ordering used by every
// ranking in the library: score descending, then frequency descending, then
// word ascending. Target words of both sets are excluded.
BiasRanking rank_by_score(const EmbeddingModel &model, const TargetSet &s1,
                          const TargetSet &s2, const PosTagger &tagger,
                          const std::set<PosTag> &allowed, std::size_t k,
                          const std::function<double(std::size_t)> &score);

BiasRanking rank_biased(const EmbeddingModel &model, const TargetSet &s1,
                        const TargetSet &s2, const PosTagger &tagger,
                        const std::set<PosTag> &allowed, std::size_t k);

struct BiasDistribution {
    BiasRanking toward_s1;  // every candidate, bias toward s1 descending
    BiasRanking toward_s2;  // every candidate, bias toward s2 descending
};

BiasDistribution bias_distribution(const EmbeddingModel &model, const TargetSet &s1,
                                   const TargetSet &s2, const PosTagger &tagger,
                                   const std::set<PosTag> &allowed);

// CSV "rank,word,bias,frequency" (rank is 1-based).
std::string ranking_csv(const BiasRanking &ranking);
// CSV "direction,rank,word,bias" with both curves.
std::string distribution_csv(const BiasDistribution &dist);
// Reads the word column back from a ranking CSV.
std::vector<std::string> read_ranking_words(const std::filesystem::path &path);

}  // namespace cbias

#endif  // CBIAS_BIAS_H_
