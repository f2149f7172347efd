// Prior (context-free) word polarity and averaged polarity of word sets.

#ifndef CBIAS_SENTIMENT_H_
#define CBIAS_SENTIMENT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

namespace cbias {

// word -> polarity in [-1, 1].
class SentimentLexicon {
public:
    SentimentLexicon() = default;

    // Throws ArgumentError if the score is outside [-1, 1].
    void add(std::string word, double score);
    std::size_t size() const { return scores_.size(); }
    // Where the lexicon came from; reported alongside sentiment results.
    const std::string &source() const { return source_; }

    // TSV "word<TAB>score".
    static SentimentLexicon load(const std::filesystem::path &path);

    std::optional<double> find(std::string_view word) const;

private:
    std::unordered_map<std::string, double> scores_;
    std::string source_ = "in-memory";
};

// Lexicon value, or 0 for unknown words.
double word_sentiment(const SentimentLexicon &lex, std::string_view word);

// Mean of word_sentiment over all words; unknown words count as 0 in the
// denominator. Throws ArgumentError for an empty set.
double set_sentiment(const SentimentLexicon &lex, std::span<const std::string> words);

}  // namespace cbias

#endif  // CBIAS_SENTIMENT_H_
