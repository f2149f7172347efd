#include "cbias/sentiment.h"

#include <charconv>
#include <cmath>
#include <fstream>

#include "cbias/errors.h"
#include "cbias/util.h"

namespace cbias {

void SentimentLexicon::add(std::string word, double score) {
    if (!(score >= -1.0 && score <= 1.0)) {
        throw ArgumentError("polarity of '" + word + "' outside [-1, 1]");
    }
    scores_.insert_or_assign(to_lower(word), score);
}

std::optional<double> SentimentLexicon::find(std::string_view word) const {
    auto it = scores_.find(to_lower(word));
    if (it == scores_.end()) return std::nullopt;
    return it->second;
}

SentimentLexicon SentimentLexicon::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    SentimentLexicon lex;
    lex.source_ = path.filename().string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string() + ": expected word<TAB>score", line_no);
        }
        auto value = trim(std::string_view(line).substr(tab + 1));
        double score = 0.0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), score);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
            throw FormatError(path.string() + ": bad score", line_no);
        }
        try {
            lex.add(std::string(trim(line.substr(0, tab))), score);
        } catch (const ArgumentError &e) {
            throw FormatError(path.string() + ": " + e.what(), line_no);
        }
    }
    return lex;
}

double word_sentiment(const SentimentLexicon &lex, std::string_view word) {
    return lex.find(word).value_or(0.0);
}

double set_sentiment(const SentimentLexicon &lex, std::span<const std::string> words) {
    if (words.empty()) throw ArgumentError("sentiment of an empty word set");
    double sum = 0.0;
    for (const auto &w : words) sum += word_sentiment(lex, w);
    return sum / static_cast<double>(words.size());
}

}  // namespace cbias
